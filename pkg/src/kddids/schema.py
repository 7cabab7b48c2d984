"""Feature schema, attack-label taxonomy, and record types for KDD Cup 99 data.

A connection record is one comma-separated line of 42 fields: 41 features
(38 continuous, 3 symbolic) followed by an attack label such as ``smurf.``
or ``normal.``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

CONTINUOUS = "continuous"
SYMBOLIC = "symbolic"

# Canonical KDD Cup 99 field list (order matters; label is field 42).
KDD99_FEATURES: tuple[tuple[str, str], ...] = (
    ("duration", CONTINUOUS),
    ("protocol_type", SYMBOLIC),
    ("service", SYMBOLIC),
    ("flag", SYMBOLIC),
    ("src_bytes", CONTINUOUS),
    ("dst_bytes", CONTINUOUS),
    ("land", CONTINUOUS),
    ("wrong_fragment", CONTINUOUS),
    ("urgent", CONTINUOUS),
    ("hot", CONTINUOUS),
    ("num_failed_logins", CONTINUOUS),
    ("logged_in", CONTINUOUS),
    ("num_compromised", CONTINUOUS),
    ("root_shell", CONTINUOUS),
    ("su_attempted", CONTINUOUS),
    ("num_root", CONTINUOUS),
    ("num_file_creations", CONTINUOUS),
    ("num_shells", CONTINUOUS),
    ("num_access_files", CONTINUOUS),
    ("num_outbound_cmds", CONTINUOUS),
    ("is_host_login", CONTINUOUS),
    ("is_guest_login", CONTINUOUS),
    ("count", CONTINUOUS),
    ("srv_count", CONTINUOUS),
    ("serror_rate", CONTINUOUS),
    ("srv_serror_rate", CONTINUOUS),
    ("rerror_rate", CONTINUOUS),
    ("srv_rerror_rate", CONTINUOUS),
    ("same_srv_rate", CONTINUOUS),
    ("diff_srv_rate", CONTINUOUS),
    ("srv_diff_host_rate", CONTINUOUS),
    ("dst_host_count", CONTINUOUS),
    ("dst_host_srv_count", CONTINUOUS),
    ("dst_host_same_srv_rate", CONTINUOUS),
    ("dst_host_diff_srv_rate", CONTINUOUS),
    ("dst_host_same_src_port_rate", CONTINUOUS),
    ("dst_host_srv_diff_host_rate", CONTINUOUS),
    ("dst_host_serror_rate", CONTINUOUS),
    ("dst_host_srv_serror_rate", CONTINUOUS),
    ("dst_host_rerror_rate", CONTINUOUS),
    ("dst_host_srv_rerror_rate", CONTINUOUS),
)


class SchemaError(ValueError):
    """A feature schema violates its structural invariants."""


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str  # CONTINUOUS or SYMBOLIC


class FeatureSchema:
    """Ordered list of 41 feature descriptors; the label is always field 42."""

    def __init__(self, features):
        features = tuple(
            f if isinstance(f, FeatureDescriptor) else FeatureDescriptor(*f)
            for f in features
        )
        if len(features) != 41:
            raise SchemaError(f"expected 41 features, got {len(features)}")
        names = [f.name for f in features]
        if len(set(names)) != len(names) or any(not n for n in names):
            raise SchemaError("feature names must be unique and non-empty")
        sym = tuple(i for i, f in enumerate(features) if f.kind == SYMBOLIC)
        if sym != (1, 2, 3):
            raise SchemaError(f"symbolic features must sit at positions 2-4, got {sym}")
        for f in features:
            if f.kind not in (CONTINUOUS, SYMBOLIC):
                raise SchemaError(f"unknown feature kind {f.kind!r}")
        self.features = features
        self.symbolic_positions = sym
        self.continuous_positions = tuple(
            i for i in range(41) if i not in sym
        )
        self.label_position = 41

    @classmethod
    def kdd99(cls) -> "FeatureSchema":
        return cls(KDD99_FEATURES)

    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for f in self.features:
            h.update(f"{f.name}:{f.kind};".encode())
        return h.hexdigest()[:16]

    def __len__(self) -> int:
        return len(self.features)

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureSchema) and self.features == other.features

    def __hash__(self) -> int:
        return hash(self.features)


class KddRecord(NamedTuple):
    """One parsed connection record: 41 feature values plus its attack label.

    Continuous values are finite floats; symbolic values are strings.
    """

    values: tuple
    label: str


class AttackCategory(enum.Enum):
    NORMAL = "normal"
    DOS = "dos"
    U2R = "u2r"
    R2L = "r2l"
    PROBE = "probe"


# Fixed reporting order for the 5-way classification target.
CATEGORY_ORDER: tuple[AttackCategory, ...] = (
    AttackCategory.NORMAL,
    AttackCategory.DOS,
    AttackCategory.U2R,
    AttackCategory.R2L,
    AttackCategory.PROBE,
)

# The 22 labels of the public corpus taxonomy (normalized spellings).
ATTACK_TAXONOMY: dict[str, AttackCategory] = {
    "smurf": AttackCategory.DOS,
    "neptune": AttackCategory.DOS,
    "back": AttackCategory.DOS,
    "pod": AttackCategory.DOS,
    "teardrop": AttackCategory.DOS,
    "buffer_overflow": AttackCategory.U2R,
    "loadmodule": AttackCategory.U2R,
    "perl": AttackCategory.U2R,
    "rootkit": AttackCategory.U2R,
    "ftp_write": AttackCategory.R2L,
    "guess_passwd": AttackCategory.R2L,
    "imap": AttackCategory.R2L,
    "multihop": AttackCategory.R2L,
    "phf": AttackCategory.R2L,
    "spy": AttackCategory.R2L,
    "warezclient": AttackCategory.R2L,
    "warezmaster": AttackCategory.R2L,
    "ipsweep": AttackCategory.PROBE,
    "nmap": AttackCategory.PROBE,
    "portsweep": AttackCategory.PROBE,
    "satan": AttackCategory.PROBE,
    "normal": AttackCategory.NORMAL,
}


class LabelError(ValueError):
    """An attack label is malformed or outside the known taxonomy."""


class UnknownLabel(LabelError):
    """Label has no category and the policy demands one."""


def normalize_label(raw: str) -> str:
    """Lowercase, strip surrounding whitespace and the trailing period."""
    label = raw.strip().lower()
    if label.endswith("."):
        label = label[:-1]
    if not label:
        raise LabelError("empty attack label")
    if "," in label or any(c.isspace() for c in label):
        raise LabelError(f"attack label contains separator characters: {label!r}")
    return label


@dataclass(frozen=True)
class UnknownLabelPolicy:
    """What to do with a label outside the 22-entry taxonomy.

    ``error`` raises, ``skip`` drops the record (category None), ``map_to``
    forces a category.
    """

    kind: str
    category: AttackCategory | None = None

    @classmethod
    def error(cls) -> "UnknownLabelPolicy":
        return cls("error")

    @classmethod
    def skip(cls) -> "UnknownLabelPolicy":
        return cls("skip")

    @classmethod
    def map_to(cls, category: AttackCategory) -> "UnknownLabelPolicy":
        return cls("map_to", category)


ERROR_POLICY = UnknownLabelPolicy.error()
SKIP_POLICY = UnknownLabelPolicy.skip()


def label_to_category(
    label: str, policy: UnknownLabelPolicy = ERROR_POLICY
) -> AttackCategory | None:
    """Map a normalized label to its attack category.

    Returns None for unknown labels under the skip policy.
    """
    cat = ATTACK_TAXONOMY.get(label)
    if cat is not None:
        return cat
    if policy.kind == "skip":
        return None
    if policy.kind == "map_to":
        return policy.category
    raise UnknownLabel(f"label {label!r} is not in the attack taxonomy")
