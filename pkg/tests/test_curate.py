import pytest

from conftest import make_record
from kddids.curate import (
    DEFAULT_TARGETS,
    CurationPlan,
    InsufficientPool,
    ShortfallError,
    deduplicate,
    split_holdout,
    stratified_sample,
)


def distinct_records(label, n, salt=0):
    return [
        make_record(label, duration=float(i + salt), src_bytes=float(i * 7))
        for i in range(n)
    ]


class TestDeduplicate:
    def test_exact_duplicates_collapse(self):
        rec = make_record("smurf", src_bytes=1032.0)
        assert deduplicate([rec, rec]) == [rec]

    def test_same_values_different_label_kept(self):
        a = make_record("normal", src_bytes=5.0)
        b = make_record("smurf", src_bytes=5.0)
        assert deduplicate([a, b]) == [a, b]

    def test_idempotent(self):
        records = distinct_records("nmap", 4) + distinct_records("nmap", 4)
        once = deduplicate(records)
        assert deduplicate(once) == once

    def test_first_occurrence_and_order_preserved(self):
        a, b, c = distinct_records("satan", 3)
        records = [b, a, b, c, a]
        assert deduplicate(records) == [b, a, c]

    def test_against_quadratic_all_pairs_oracle(self, rng):
        pool = distinct_records("back", 6)
        records = [pool[int(i)] for i in rng.integers(0, 6, size=25)]
        got = deduplicate(records)
        # oracle: keep r[i] iff no j < i with an equal record
        expected = [
            r for i, r in enumerate(records)
            if not any(records[j] == r for j in range(i))
        ]
        assert got == expected


class TestStratifiedSample:
    def test_target_two_of_nine(self):
        # 9 available, target 2: the shipped plan for this label
        records = distinct_records("loadmodule", 9)
        plan = CurationPlan({"loadmodule": 2}, holdout_size=0, seed=11)
        curated = stratified_sample(records, plan)
        assert len(curated.records) == 2
        assert curated.shortfalls == {}
        assert all(r in records for r in curated.records)

    def test_take_all_on_shortfall(self):
        records = distinct_records("perl", 3)
        plan = CurationPlan({"perl": 10}, holdout_size=0, seed=1)
        curated = stratified_sample(records, plan)
        assert len(curated.records) == 3
        assert curated.shortfalls == {"perl": (10, 3)}

    def test_error_policy_on_shortfall(self):
        records = distinct_records("perl", 3)
        plan = CurationPlan({"perl": 10}, holdout_size=0, seed=1,
                            shortfall_policy="error")
        with pytest.raises(ShortfallError):
            stratified_sample(records, plan)

    def test_deterministic_under_seed(self):
        records = distinct_records("smurf", 50) + distinct_records("normal", 80)
        plan = CurationPlan({"smurf": 20, "normal": 30}, holdout_size=0, seed=99)
        a = stratified_sample(records, plan)
        b = stratified_sample(records, plan)
        assert a.records == b.records  # identical selection and order

    def test_different_seeds_differ(self):
        records = distinct_records("smurf", 200)
        out = [
            stratified_sample(
                records, CurationPlan({"smurf": 50}, holdout_size=0, seed=s)
            ).records
            for s in (1, 2)
        ]
        assert out[0] != out[1]

    def test_counts_never_exceed_target_or_availability(self, rng):
        for trial in range(5):
            avail = {lbl: int(rng.integers(0, 30)) for lbl in ("a1", "b2", "c3")}
            records = []
            for lbl, n in avail.items():
                records.extend(distinct_records(lbl, n))
            targets = {lbl: int(rng.integers(0, 30)) for lbl in avail}
            plan = CurationPlan(targets, holdout_size=0, seed=trial)
            curated = stratified_sample(records, plan)
            for lbl in avail:
                got = curated.summary.per_label.get(lbl, 0)
                assert got == min(targets[lbl], avail[lbl])

    def test_labels_without_target_are_not_sampled(self):
        records = distinct_records("land", 5) + distinct_records("smurf", 5)
        plan = CurationPlan({"smurf": 3}, holdout_size=0, seed=0)
        curated = stratified_sample(records, plan)
        assert curated.summary.per_label == {"smurf": 3}

    def test_order_is_a_seeded_permutation(self):
        records = distinct_records("smurf", 30)
        plan = CurationPlan({"smurf": 30}, holdout_size=0, seed=5)
        curated = stratified_sample(records, plan)
        assert sorted(map(tuple, curated.records)) == sorted(map(tuple, records))
        assert curated.records != records  # shuffled, not file order


class TestSplitHoldout:
    def test_disjoint_and_sized(self):
        pool = distinct_records("normal", 100)
        train, test = split_holdout(pool, 40, seed=3)
        assert len(test) == 40
        assert len(train) == 60
        test_ids = {id(r) for r in test}
        assert all(id(r) not in test_ids for r in train)

    def test_zero_holdout(self):
        pool = distinct_records("normal", 10)
        train, test = split_holdout(pool, 0, seed=3)
        assert test == []
        assert train == pool

    def test_insufficient_pool(self):
        with pytest.raises(InsufficientPool):
            split_holdout(distinct_records("normal", 5), 6, seed=0)

    def test_deterministic(self):
        pool = distinct_records("normal", 50)
        assert split_holdout(pool, 20, 7) == split_holdout(pool, 20, 7)


class TestDefaultPlan:
    def test_matches_published_targets(self):
        plan = CurationPlan.default(seed=1)
        assert plan.per_label_targets["smurf"] == 85983
        assert plan.per_label_targets["neptune"] == 32827
        assert plan.per_label_targets["normal"] == 28500
        assert plan.per_label_targets["loadmodule"] == 2
        assert len(plan.per_label_targets) == 22
        assert sum(plan.per_label_targets.values()) == 148753

    def test_default_class_fractions(self):
        # normal ~19%, DOS ~79% of the curated training set
        total = sum(DEFAULT_TARGETS.values())
        normal = DEFAULT_TARGETS["normal"] / total
        dos = sum(
            DEFAULT_TARGETS[l] for l in ("smurf", "neptune", "back", "pod", "teardrop")
        ) / total
        assert abs(normal - 0.19) < 0.01
        assert abs(dos - 0.79) < 0.01

    def test_json_round_trip(self):
        plan = CurationPlan.default(seed=42, holdout_size=1234)
        again = CurationPlan.from_json(plan.to_json())
        assert again == plan
