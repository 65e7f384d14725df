import numpy as np

# Numeric defaults
DEFAULT_DTYPE = np.float32
CHECK_DTYPE = np.float64

# GOATCKPT checkpoint header
CHECKPOINT_MAGIC = b'GOATCKPT'
CHECKPOINT_VERSION = 1

# Occlusion / supervision
OCCLUSION_THRESHOLD = 0.5  # binarisation for metrics only
LR_CONSISTENCY_THRESHOLD = 1.0  # px
BCE_EPSILON = 1e-7

# KITTI D1 rule: outlier if error > 3 px and > 5% of ground truth
D1_ABS_THRESHOLD = 3.0
D1_REL_THRESHOLD = 0.05

# Dataset layout: <root>/<split>/<id><suffix>
LEFT_IMAGE_SUFFIX = '_left.ppm'
RIGHT_IMAGE_SUFFIX = '_right.ppm'
LEFT_DISP_SUFFIX = '_dispL.pfm'
RIGHT_DISP_SUFFIX = '_dispR.pfm'
OCCLUSION_SUFFIX = '_occ.pgm'
MANIFEST_FILENAME = 'manifest.csv'
EFFECTIVE_CONFIG_FILENAME = 'effective_config.ini'

# Augmentation ranges
CHROMATIC_RANGE = (0.8, 1.2)
Y_OFFSET_RANGE = (-2, 2)
MASK_PATCH_MIN = (40, 40)  # (height, width)
MASK_PATCH_MAX = (120, 180)

# Colors:
DISPARITY_COLORMAP = 'magma'
LOSS_COLOR = tuple(np.array([0, 114, 178], dtype=float) / 255)
SMOOTH_COLOR = tuple(np.array([213, 94, 0], dtype=float) / 255)
