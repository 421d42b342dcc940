"""Experiment configuration and its ``key = value`` file format."""
import hashlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError

DEFAULT_GEOMETRY = Path(__file__).with_name("data") / "si11.xyz"

MODELS = ("gpr", "qgpr")
CLASSICAL_KERNELS = ("dotproduct_white", "constant_rbf")
QUANTUM_KERNELS = ("fqk", "pqk")
FEATURE_MAPS = ("yz_cx", "highdim")
ACQUISITIONS = ("exploitation", "lcb", "random")
ORACLES = ("table", "toy", "command")


@dataclass
class AlConfig:
    geometry_xyz: str = str(DEFAULT_GEOMETRY)
    n_sites: int = 11
    n_dopants: int = 4
    dopant_element: str = "Al"
    oracle: str = "toy"
    energy_table: str = ""
    command: str = ""
    toy_j_sisi: float = 0.0
    toy_j_sial: float = -0.3
    toy_j_alal: float = 0.5
    toy_rho: float = 2.0
    model: str = "gpr"
    kernel: str = "dotproduct_white"
    feature_map: str = "yz_cx"
    reps: int = 4
    gamma: float = 1.0
    diag_reg: float = None
    pca_components: int = 4
    mbtr_grid_min: float = 0.0
    mbtr_grid_max: float = 1.0
    mbtr_grid_points: int = 50
    mbtr_sigma: float = 0.02
    mbtr_decay: float = 0.5
    n_initial: int = 20
    n_cycles: int = 60
    n_selected: int = 5
    acquisition: str = "exploitation"
    kappa: float = 2.0
    init_threshold_hartree: float = None
    init_quantile: float = None
    runs: int = 10
    base_seed: int = 0
    train_fraction: float = 0.95
    n_restarts: int = 2
    out_dir: str = "runs"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    @property
    def effective_diag_reg(self):
        if self.diag_reg is not None:
            return self.diag_reg
        return 1.0 if self.model == "gpr" else 1e-4

    @property
    def label(self):
        if self.model == "gpr":
            name = {"dotproduct_white": "GPR-kernel1", "constant_rbf": "GPR-kernel2"}[self.kernel]
        else:
            fmap = {"yz_cx": "YZ_CX", "highdim": "HighDim"}[self.feature_map]
            name = f"QGPR-{fmap}-{self.kernel.upper()}"
        if self.acquisition == "random":
            name = "random"
        return f"{name}-PCA{self.pca_components}"

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.model in MODELS, f"model must be one of {MODELS}")
        allowed = CLASSICAL_KERNELS if self.model == "gpr" else QUANTUM_KERNELS
        need(self.kernel in allowed, f"kernel for model {self.model!r} must be one of {allowed}")
        need(self.feature_map in FEATURE_MAPS, f"feature_map must be one of {FEATURE_MAPS}")
        need(self.acquisition in ACQUISITIONS, f"acquisition must be one of {ACQUISITIONS}")
        need(self.oracle in ORACLES, f"oracle must be one of {ORACLES}")
        need(self.oracle != "table" or self.energy_table, "oracle = table requires energy_table")
        need(self.oracle != "command" or self.command, "oracle = command requires command")
        need(self.n_initial >= 2, "n_initial must be >= 2")
        need(self.n_selected >= 1, "n_selected must be >= 1")
        need(self.n_cycles >= 0, "n_cycles must be >= 0")
        need(0.0 < self.train_fraction < 1.0, "train_fraction must lie in (0, 1)")
        need(self.runs >= 1, "runs must be >= 1")
        need(self.reps >= 1, "reps must be >= 1")
        need(self.gamma > 0, "gamma must be positive")
        need(self.pca_components >= 1, "pca_components must be >= 1")
        need(self.workers >= 1, "workers must be >= 1")
        need(self.n_restarts >= 0, "n_restarts must be >= 0")
        need(
            self.init_threshold_hartree is None or self.init_quantile is None,
            "give at most one of init_threshold_hartree and init_quantile",
        )
        need(self.init_quantile is None or 0.0 <= self.init_quantile <= 1.0, "init_quantile must lie in [0, 1]")

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        """Digest of every setting that can change results."""
        skip = {"out_dir", "workers"}
        items = sorted((k, v) for k, v in self.to_dict().items() if k not in skip)
        text = "\n".join(f"{k}={v!r}" for k, v in items)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _key_to_field(key):
    return key.replace(".", "_")


def _coerce(name, raw):
    ftype = {f.name: f for f in fields(AlConfig)}[name]
    default = ftype.default
    if name in ("diag_reg", "init_threshold_hartree", "init_quantile"):
        kind = float
    else:
        kind = type(default)
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot convert {raw!r} to {kind.__name__}") from None
    return raw


def parse_config(text, base_dir=None):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(AlConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        name = _key_to_field(key)
        if name not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[name] = _coerce(name, raw)
    if base_dir is not None:
        for key in ("geometry_xyz", "energy_table", "out_dir"):
            if values.get(key) and not Path(values[key]).is_absolute():
                values[key] = str(Path(base_dir) / values[key])
    return AlConfig(**values)


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def format_config(config):
    lines = []
    for f in fields(AlConfig):
        value = getattr(config, f.name)
        if value is None:
            continue
        key = f.name
        for prefix in ("toy", "mbtr"):
            if key.startswith(prefix + "_"):
                key = prefix + "." + key[len(prefix) + 1:]
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
