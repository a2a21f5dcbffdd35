import numpy as np
import pytest

from pta_unet.errors import ConfigError, ShapeError
from pta_unet.model import ModelConfig, as_input, build_model, make_divisible, strip_pta
from pta_unet.nn import PtaBlock
from pta_unet.pta import EVAL_CONFIGS, apply_config


def images(n=2, size=64, seed=0):
	return as_input(np.random.default_rng(seed).random((n, 3, size, size), dtype=np.float32))


@pytest.fixture(scope='module')
def full_model():
	return build_model(seed=0)


def test_make_divisible():
	assert make_divisible(32 * 0.25) == 8
	assert make_divisible(6) == 8
	assert make_divisible(100) == 104
	# never more than 10% below the request
	assert make_divisible(18) == 24


def test_model_config_validation():
	assert ModelConfig().downsampling == 32
	with pytest.raises(ConfigError):
		ModelConfig(n_classes=1)
	with pytest.raises(ConfigError):
		ModelConfig(decoder_channels=(64, 32, 16, 8))
	with pytest.raises(ConfigError):
		ModelConfig(pta_stages=(3, 4))
	with pytest.raises(ConfigError):
		ModelConfig(pta_stages=(0, 4, 5))


def test_forward_shape(toy_model):
	out = toy_model.eval()(images())
	assert out.shape == (2, 4, 64, 64)
	assert out.dtype == np.float32


def test_forward_accepts_arrays(toy_model):
	batch = images()
	assert as_input(batch) is batch
	toy_model.eval()
	np.testing.assert_array_equal(toy_model(batch.data).data, toy_model(batch).data)


def test_forward_rejects_bad_inputs(toy_model):
	with pytest.raises(ShapeError):
		toy_model(images(size=48))
	with pytest.raises(ShapeError):
		toy_model(as_input(np.zeros((1, 1, 64, 64), dtype=np.float32)))


def test_encoder_skips(toy_model):
	features, skips = toy_model.eval().encoder(images())
	assert [skip.shape[1:] for skip in skips] == [(3, 64, 64), (8, 32, 32), (8, 16, 16), (8, 8, 8), (24, 4, 4)]
	assert features.shape == (2, 64, 2, 2)


def test_full_width_layout(full_model):
	assert [block.in_channels for _, block in full_model.pta_sites] == [64, 96, 160]
	widths = [block.conv1.in_channels for block in full_model.decoder]
	assert widths == [1280 + 96, 256 + 32, 128 + 24, 64 + 16, 32 + 3]
	assert full_model.head.out_channels == 12
	assert full_model.head.bias is not None


def test_site_names(toy_model):
	assert toy_model.site_names == ['encoder.features.9', 'encoder.features.11', 'encoder.features.13']
	assert all(isinstance(module, PtaBlock) for _, module in toy_model.pta_sites)
	assert str(toy_model.active_config) == 'HHH'


def test_same_seed_same_weights(toy_config):
	assert build_model(seed=3, config=toy_config).checksum() == build_model(seed=3, config=toy_config).checksum()
	assert build_model(seed=3, config=toy_config).checksum() != build_model(seed=4, config=toy_config).checksum()


def test_heavy_config_matches_baseline_clone(toy_model):
	toy_model.eval()
	apply_config(toy_model, 'HHH')
	baseline = strip_pta(toy_model).eval()
	x = images()
	np.testing.assert_array_equal(toy_model(x).data, baseline(x).data)
	assert baseline.active_config is None
	assert not baseline.has_pta


def test_baseline_clone_drops_light_branches(toy_model):
	baseline = strip_pta(toy_model)
	keys = set(toy_model.state_dict())
	assert set(baseline.state_dict()) == {key for key in keys if '.light.' not in key}
	light = sum(site.light.num_parameters() for _, site in toy_model.pta_sites)
	assert baseline.num_parameters() == toy_model.num_parameters() - light


def test_identity_branches_make_configs_agree(toy_model):
	toy_model.eval()
	for _, site in toy_model.pta_sites:
		for block in [site.light, *site.heavy]:
			projection = block.conv[-1][1]
			projection.weight.data[:] = 0
			projection.bias.data[:] = 0
	x = images()
	reference = toy_model(x, config='HHH').data
	for config in ('LLL', 'BBB', 'LHB'):
		np.testing.assert_array_equal(toy_model(x, config=config).data, reference)


def test_switching_configs_keeps_weights(toy_model):
	toy_model.eval()
	before = toy_model.checksum()
	x = images(n=1)
	for config in EVAL_CONFIGS:
		toy_model(x, config=config)
	assert toy_model.checksum() == before


def test_forward_config_argument(toy_model):
	toy_model.eval()(images(n=1), config='lhb')
	assert str(toy_model.active_config) == 'LHB'
	with pytest.raises(ConfigError):
		strip_pta(toy_model)(images(n=1), config='HHH')


def test_configs_give_different_outputs(toy_model):
	toy_model.eval()
	x = images(n=1)
	outputs = {config: toy_model(x, config=config).data for config in ('HHH', 'LLL', 'BBB')}
	assert not np.array_equal(outputs['HHH'], outputs['LLL'])
	assert not np.array_equal(outputs['HHH'], outputs['BBB'])
