from dataclasses import asdict, dataclass, field, fields, replace

import ujson
from probesizer.exceptions import ConfigError

DEFAULT_DELTA = 1e-8
DEFAULT_ETA = 4
DEFAULT_ALPHA = 0.05
DEFAULT_NUM_SIMS = 1000
DEFAULT_BITS_PER_PARAM = 32
DEFAULT_METRIC_RANGE = 1.0
DEFAULT_GAP_DIVISOR = 2.0

DEFAULT_PREQUENTIAL_C = 1.0
DEFAULT_T1_FRACTION = 0.001

DEFAULT_COLLAPSED_BELOW = 0.2
DEFAULT_NOT_COLLAPSED_AT = 0.8
DEFAULT_NUM_TRIALS = 20
DEFAULT_NUM_FOLDS = 6

DEFAULT_RNG_SEED = 0
POWER_THRESHOLD = 0.8

# hyper-parameter search space for probe training
LEARNING_RATES = (1e-4, 5e-4, 1e-3, 5e-3, 1e-2)
BATCH_SIZES = (8, 16, 32, 64)
MAX_EPOCHS = 50
PATIENCE = 5
DEFAULT_HIDDEN_UNITS = 20

SUBSET_GRID = (2 ** 7, 2 ** 9, 2 ** 11, 2 ** 13, 2 ** 15)
NOISE_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0)
DEFAULT_NUM_SEEDS = 5
CLOSED_LOOP_CAP = 2 ** 16

THREADS_ENV_VAR = "PROBE_SIZER_THREADS"
MAX_DEFAULT_THREADS = 8

SYNTHETIC_NOTE = (
    "Synthetic stand-in: representations are Gaussian class blobs, not encoder outputs. "
    "Encoder corruption is modelled as reduced class separation plus added noise."
)

MESSAGE_DELTA_RANGE = "delta must lie in (0,1)"
MESSAGE_ALPHA_RANGE = "alpha must lie in (0,1)"
MESSAGE_ETA_RANGE = "eta must be positive"
MESSAGE_N_RANGE = "n must be a positive integer"
MESSAGE_EPSILON_RANGE = "epsilon must be positive"
MESSAGE_METRIC_RANGE = "metric range B must be positive, unbounded losses need an explicit cap"
MESSAGE_UNBOUNDED_RANGE = (
    "MDL codelengths are unbounded, pass an explicit metric range B (--metric-range)"
)
MESSAGE_T1_FRACTION_RANGE = "t1_fraction must lie in (0,1)"
MESSAGE_T1_TOO_SMALL = "t1 = round(t1_fraction * n) must be at least 1"
MESSAGE_EMPTY_PILOT = "pilot performances should not be empty"
MESSAGE_COLLAPSED = "collapsed comparison"
MESSAGE_COLLAPSE_WARNING = (
    "collapse detection flags this comparison, the data requirement is not meaningful"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat mirror of every module default; what reports echo for provenance"""

    delta: float = DEFAULT_DELTA
    eta: float = DEFAULT_ETA
    alpha: float = DEFAULT_ALPHA
    num_sims: int = DEFAULT_NUM_SIMS
    bits_per_param: int = DEFAULT_BITS_PER_PARAM
    # None: B = 1 for accuracies, refused for MDL codelengths
    metric_range: float = None
    gap_divisor: float = DEFAULT_GAP_DIVISOR
    prequential_c: float = DEFAULT_PREQUENTIAL_C
    t1_fraction: float = DEFAULT_T1_FRACTION
    collapsed_below: float = DEFAULT_COLLAPSED_BELOW
    not_collapsed_at: float = DEFAULT_NOT_COLLAPSED_AT
    num_trials: int = DEFAULT_NUM_TRIALS
    num_folds: int = DEFAULT_NUM_FOLDS
    num_seeds: int = DEFAULT_NUM_SEEDS
    rng_seed: int = DEFAULT_RNG_SEED
    predictions_path: str = None
    gaps_path: str = None
    output_dir: str = None
    # names set by a config file or a flag rather than left at their default
    explicit: frozenset = field(default=frozenset(), compare=False, repr=False)

    @classmethod
    def settings(cls):
        return [item.name for item in fields(cls) if item.name != "explicit"]

    @classmethod
    def from_dict(cls, values):
        unknown = sorted(set(values) - set(cls.settings()))
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        config = cls(**values, explicit=frozenset(values))
        config.validate()
        return config

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                values = ujson.load(f)
        except (OSError, ValueError) as error:
            raise ConfigError(f"Cannot read configuration file {path}: {error}")
        if not isinstance(values, dict):
            raise ConfigError(
                f"Configuration file {path} should hold a JSON object of settings"
            )
        return cls.from_dict(values)

    def with_overrides(self, **overrides):
        # flags that were not given arrive as None and leave the file value alone
        given = {key: value for key, value in overrides.items() if value is not None}
        unknown = sorted(set(given) - set(self.settings()))
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")
        config = replace(self, **given, explicit=self.explicit | frozenset(given))
        config.validate()
        return config

    def validate(self):
        try:
            checks = self._checks()
        except TypeError as error:
            raise ConfigError(f"Configuration value has the wrong type: {error}")
        for passed, message in checks:
            if not passed:
                raise ConfigError(message)
        return

    def _checks(self):
        return [
            (0 < self.delta < 1, MESSAGE_DELTA_RANGE),
            (self.eta > 0, MESSAGE_ETA_RANGE),
            (0 < self.alpha < 1, MESSAGE_ALPHA_RANGE),
            (self.num_sims >= 1, "num_sims must be at least 1"),
            (self.bits_per_param >= 1, "bits_per_param must be at least 1"),
            (self.metric_range is None or self.metric_range > 0, MESSAGE_METRIC_RANGE),
            (self.gap_divisor > 0, "gap_divisor must be positive"),
            (self.prequential_c > 0, "prequential_c must be positive"),
            (0 < self.t1_fraction < 1, MESSAGE_T1_FRACTION_RANGE),
            (
                0 < self.collapsed_below <= self.not_collapsed_at < 1,
                "thresholds must satisfy 0 < collapsed_below <= not_collapsed_at < 1",
            ),
            (self.num_trials >= 2, "num_trials must be at least 2"),
            (self.num_folds >= 3, "num_folds must be at least 3"),
            (self.num_seeds >= 1, "num_seeds must be at least 1"),
        ]

    def to_dict(self):
        values = asdict(self)
        del values["explicit"]
        return values
