"""kddids: intrusion-detection classifiers over KDD Cup 99 connection records.

Pipeline: ingest (streaming parse + tally), curate (dedup, stratified
sampling, holdout split), train (decision tree, MLP, Bayes-rule classifier),
evaluate (confusion-matrix metrics with text/CSV/figure reports).
"""

__version__ = "0.1.0"
