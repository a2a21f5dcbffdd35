"""
Constants
=========

Provides useful constants and Enums.
"""

from enum import Enum


# Global constants ----

N_CLASSES = 12
LETTERBOX_SIZE = 256
DICE_EPS = 1e-6
CI95_Z = 1.96

# (t, c, n, s): expansion, output channels, repeats, first stride
MOBILENET_V2_STAGES = ((1, 16, 1, 1),
					   (6, 24, 2, 2),
					   (6, 32, 3, 2),
					   (6, 64, 4, 2),
					   (6, 96, 3, 1),
					   (6, 160, 3, 2),
					   (6, 320, 1, 1))

# Indices into MOBILENET_V2_STAGES whose last two blocks become PTA sites
PTA_STAGES = (3, 4, 5)

STEM_CHANNELS = 32
LAST_CHANNELS = 1280
DECODER_CHANNELS = (256, 128, 64, 32, 16)

CAMVID_SPLIT_SIZES = {'train': 367, 'val': 101, 'test': 233}

camvid_classes = (('sky', (128, 128, 128)),
				  ('building', (128, 0, 0)),
				  ('pole', (192, 192, 128)),
				  ('road', (128, 64, 128)),
				  ('pavement', (60, 40, 222)),
				  ('tree', (128, 128, 0)),
				  ('sign symbol', (192, 128, 128)),
				  ('fence', (64, 64, 128)),
				  ('car', (64, 0, 128)),
				  ('pedestrian', (64, 64, 0)),
				  ('bicyclist', (0, 128, 192)),
				  ('unlabeled', (0, 0, 0)))
"""
CamVid 12-class colour map, in class-index order.

Examples
========
>>> camvid_classes[3]
('road', (128, 64, 128))
"""

unlabeled_names = ('unlabeled', 'unlabelled', 'void')

# Synthetic shape colours, indexed by class - 1 (class 0 is the noise background)
synthetic_palette = ((0.90, 0.10, 0.10),
					 (0.10, 0.85, 0.10),
					 (0.15, 0.20, 0.95),
					 (0.95, 0.90, 0.10),
					 (0.90, 0.10, 0.90),
					 (0.10, 0.90, 0.90),
					 (0.95, 0.55, 0.10))


# Global enums ----

class BranchMode(Enum):
	"""
	Enum mapping PTA branch selectors to their one-letter codes.

	Examples
	========
	>>> BranchMode.LIGHT.value
	'L'
	>>> BranchMode('B').name
	'BOTH'
	"""
	LIGHT = 'L'
	HEAVY = 'H'
	BOTH = 'B'


sampling_probabilities = {'HHH': 0.45, 'LHH': 0.15, 'HLH': 0.15, 'HHL': 0.15, 'LLL': 0.10}
"""
Train-time PTA sampling distribution, keyed by canonical config string.
"""

evaluation_configs = ('HHH', 'LHH', 'HLH', 'HHL', 'LLL', 'BBB')
"""
The six runtime configurations evaluated from a single checkpoint.
"""

NO_PTA_LABEL = 'No PTA'

dice_modes = ('micro', 'macro')

exit_codes = {'ok': 0, 'usage': 1, 'data': 2, 'numerical': 3}
