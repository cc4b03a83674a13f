TOOL_NAME = "ssidepth"
SEED_ENV_VAR = "SSIDEPTH_SEED"
SETTINGS_FILENAME = "ssidepth.toml"
SETTINGS_TABLE = "tool.ssidepth"

DEFAULT_SEED = 7

# the positive-scale constraint is enforced by clamping
AFFINE_MIN_SCALE = 1e-6
SCALE_ONLY_MIN = 1e-6

# sparse ordinal loss
ORDINAL_DELTA = 0.01
ORDINAL_PAIR_COUNT = 2500

# multi-scale gradient losses
GRADIENT_SCALES = 4
MIN_LEVEL_SIZE = 4

# SSI-stage weights (lambda_ssi, lambda_so, lambda_ssig)
SSI_WEIGHTS = (3.0, 1.0, 0.1)
# SI-stage weights (lambda_d, lambda_dg, lambda_n, lambda_ng)
SI_WEIGHTS = (1.0, 0.5, 0.1, 0.01)

# finite-difference checker
GRADCHECK_EPSILON = 1e-6
GRADCHECK_MIN_SAMPLES = 64
GRADCHECK_KINK_FACTOR = 10.0
GRADCHECK_ATOL = 1e-7

# metrics
DELTA1_THRESHOLD = 1.25
ORD_TAU = 1.03
ORD_PAIR_COUNT = 5000
D3R_CELLS = 24
D3R_THRESHOLD = 0.10
DBE_TOP_FRACTION = 0.05
DBE_TRUNCATION = 10.0
EDGE_TIE_RTOL = 1e-6
EDGE_MIN_MAGNITUDE = 1e-6
NORMAL_ANGLE_THRESHOLD = 11.25
UNIT_NORMAL_TOLERANCE = 1e-3
DEPTH_FLOOR = 1e-6

METRIC_VARIANTS = {
    "d3r": "grid-cell-median-ordinal/v1",
    "dbe": "log-depth-top-gradient-truncated-chamfer/v1",
    "ord": "ratio-tau-sampled-pairs/v1",
    "resolution": "edge-distance-r20-proxy/v1",
}

# pipeline
RECEPTIVE_FIELD = 64
MAX_RESOLUTION_FACTOR = 4.0
RESOLUTION_MULTIPLE = 32
EDGE_TOP_FRACTION = 0.10
MIN_RECEPTIVE_FIELD = 32
CHANNEL_ORDER = ("R", "G", "B", "O_L", "O_H")

# toy model
TOY_CHANNELS = (16, 16, 16)
LEAKY_SLOPE = 0.01
ADAM_LR = 1e-3
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
BENCHMARK_SCENES = 32
BENCHMARK_HELDOUT = 8
BENCHMARK_SIZE = 64
BENCHMARK_EPOCHS = 30

# checkpoints
CHECKPOINT_MAGIC = b"SSIDCKPT"
CHECKPOINT_FORMAT_VERSION = "1.0"
