import numpy as np
import pytest

from pta_unet.data import make_synthetic, one_hot
from pta_unet.data.dataset import DatasetSplit
from pta_unet.errors import ConfigError, DataError, NumericalError, ShapeError
from pta_unet.model import ModelConfig, build_model, strip_pta
from pta_unet.pta import apply_config, current_config, parse_strategy
from pta_unet.tensor import GradTape, Parameter, Tensor, precision, softmax_channels
from pta_unet.training import (Adam, AdamState, TrainConfig, adam_step, dice_loss, dice_loss_tensor, dice_score,
							   dice_score_batch, evaluate, evaluate_configs, read_metrics, train, train_step)


def quick_config(**overrides):
	settings = dict(epochs=1, batch_size=2, augment=False, eval_configs=('HHH', 'LLL'), eval_batch_size=4)
	settings.update(overrides)
	return TrainConfig(**settings)


def snapshot(module):
	return {name: values.copy() for name, values in module.state_dict().items()}


# Dice ----

def test_dice_identities():
	g = one_hot(np.array([[[0, 1], [2, 1]]]), 3)[0]
	assert dice_score(g, g) == 1.0
	assert dice_score(np.zeros((3, 2, 2)), np.zeros((3, 2, 2))) == 1.0
	assert dice_score([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0, abs=1e-6)
	assert round(dice_score([0.5, 0.5], [1.0, 0.0]), 6) == 0.666667

	p = np.random.default_rng(0).dirichlet(np.ones(3), size=(2, 2)).transpose(2, 0, 1)
	assert dice_score(p, g) + dice_loss(p, g) == pytest.approx(1.0, abs=1e-15)
	assert 0.0 < dice_score(p, g) < 1.0


def test_dice_micro_and_macro():
	g = one_hot(np.array([[0, 0, 0, 1]]), 2)[0]
	p = one_hot(np.array([[0, 0, 0, 0]]), 2)[0]
	# pooled: 2 * 3 / (4 + 4); per class: 6 / 7 and ~0
	assert dice_score(p, g, mode='micro') == pytest.approx(0.75)
	assert dice_score(p, g, mode='macro') == pytest.approx(3 / 7, abs=1e-6)


def test_dice_batch_is_mean_of_samples():
	rng = np.random.default_rng(1)
	p = rng.dirichlet(np.ones(3), size=(4, 5, 5)).transpose(0, 3, 1, 2)
	g = one_hot(rng.integers(0, 3, size=(4, 5, 5)), 3)
	expected = np.mean([dice_score(p[i], g[i]) for i in range(4)])
	assert dice_score_batch(p, g) == pytest.approx(expected, rel=1e-12)


def test_dice_rejects_bad_arguments():
	with pytest.raises(ShapeError):
		dice_score(np.zeros((2, 3)), np.zeros((3, 2)))
	with pytest.raises(ConfigError):
		dice_score([1.0], [1.0], eps=0.0)
	with pytest.raises(ConfigError):
		dice_score([1.0], [1.0], mode='weighted')


@pytest.mark.parametrize('mode', ['micro', 'macro'])
@pytest.mark.parametrize('seed', range(10))
def test_dice_loss_gradient(seed, mode, grad_precision, gradient_error):
	dtype, tolerance = grad_precision
	rng = np.random.default_rng(seed)
	n_classes = int(rng.integers(2, 5))
	target = one_hot(rng.integers(0, n_classes, size=(2, 3, 3)), n_classes, dtype=np.float64)
	logits = rng.normal(size=(2, n_classes, 3, 3))

	def loss(logits):
		return dice_loss_tensor(softmax_channels(logits), target, mode=mode)

	assert gradient_error(loss, [logits], dtype) < tolerance


@pytest.mark.parametrize('mode', ['micro', 'macro'])
def test_dice_loss_tensor_matches_score(mode):
	rng = np.random.default_rng(2)
	target = one_hot(rng.integers(0, 3, size=(2, 3, 3)), 3, dtype=np.float64)
	with precision('float64'):
		probs = softmax_channels(Tensor(rng.normal(size=(2, 3, 3, 3))))
		value = dice_loss_tensor(probs, target, mode=mode)
	assert float(value.data) == pytest.approx(1.0 - dice_score_batch(probs.data, target, mode=mode), rel=1e-12)


def test_model_gradients_match_finite_differences(numeric_grad):
	images = np.random.default_rng(3).random((1, 3, 32, 32))
	masks = np.random.default_rng(4).integers(0, 4, size=(1, 32, 32))
	with precision('float64'):
		model = build_model(seed=0, config=ModelConfig.toy(4)).eval()
		apply_config(model, 'BBB')
		target = one_hot(masks, 4, dtype=np.float64)
		named = dict(model.named_parameters())
		params = [named['head.weight'], named['head.bias'], named['decoder.4.conv2.1.weight'],
				  named['encoder.features.9.light.conv.0.0.weight']]

		def loss():
			return dice_loss_tensor(softmax_channels(model(Tensor(images))), target)

		with GradTape() as tape:
			value = loss()
		grads = tape.backward(value, params)
		for param in params:
			analytic = grads[param].reshape(-1)
			for index, expected in numeric_grad(loss, param, h=1e-7, indices=[0, 3]).items():
				assert analytic[index] == pytest.approx(expected, rel=1e-4, abs=1e-8)


# Adam ----

def test_adam_first_step_moves_by_learning_rate():
	param = Parameter([1.0, -2.0])
	state = adam_step([param], {param: np.array([0.5, -3.0], dtype=np.float32)}, AdamState(), lr=1e-3)
	np.testing.assert_allclose(param.data, [1.0 - 1e-3, -2.0 + 1e-3], rtol=1e-6)
	assert state.step == 1


def test_adam_skips_parameters_without_gradients():
	used, unused = Parameter([1.0]), Parameter([5.0])
	opt = Adam([used, unused], lr=0.1)
	opt.step({used: np.array([1.0], dtype=np.float32)})
	assert unused.data.tolist() == [5.0]
	assert id(unused) not in opt.state.moments

	# bias correction counts the parameter's own updates
	opt.step({unused: np.array([1.0], dtype=np.float32)})
	assert opt.state.moments[id(unused)][2] == 1
	assert opt.state.moments[id(used)][2] == 1
	assert unused.data[0] == pytest.approx(4.9, rel=1e-6)


def test_adam_minimises_a_quadratic():
	target = np.array([1.0, -2.0, 3.0])
	with precision('float64'):
		param = Parameter(np.zeros(3))
	opt = Adam([param], lr=0.05)
	for _ in range(2000):
		opt.step({param: 2.0 * (param.data - target)})
	np.testing.assert_allclose(param.data, target, atol=0.05)


def test_adam_validation():
	with pytest.raises(ConfigError):
		Adam([], lr=0.0)
	with pytest.raises(ConfigError):
		Adam([], betas=(1.0, 0.999))
	param = Parameter([1.0, 2.0])
	with pytest.raises(ShapeError):
		Adam([param]).step({param: np.zeros(3)})


# Training ----

def test_train_config_validation():
	with pytest.raises(ConfigError):
		TrainConfig(epochs=0)
	with pytest.raises(ConfigError):
		TrainConfig(dice_mode='weighted')
	with pytest.raises(ConfigError):
		TrainConfig(eval_configs=('HXH',))
	assert TrainConfig(eval_configs=('lll',)).eval_configs == ('LLL',)
	assert TrainConfig().epochs == 600


def test_light_step_leaves_heavy_branches(toy_model, tiny_dataset):
	cfg = quick_config()
	optimizer = Adam(toy_model.parameters())
	images = np.stack([s.image for s in tiny_dataset.train[:2]])
	masks = np.stack([s.mask for s in tiny_dataset.train[:2]])
	before = snapshot(toy_model)
	loss = train_step(toy_model, optimizer, images, masks, 4, cfg, config='LLL')
	after = snapshot(toy_model)

	assert 0.0 < loss < 1.0
	heavy = [key for key in before if '.heavy.' in key]
	light = [key for key in before if '.light.' in key and key.endswith('weight')]
	assert heavy and light
	assert all(np.array_equal(before[key], after[key]) for key in heavy)
	assert all(not np.array_equal(before[key], after[key]) for key in light)
	assert not np.array_equal(before['encoder.features.0.0.weight'], after['encoder.features.0.0.weight'])


def test_train_is_deterministic(toy_config, tiny_dataset):
	cfg = quick_config(augment=True, max_iterations=2)
	results, checksums = [], []
	for _ in range(2):
		model = build_model(seed=0, config=toy_config)
		results.append(train(model, tiny_dataset, cfg, strategy=parse_strategy('table1'), progress=False))
		checksums.append(model.checksum())
	assert checksums[0] == checksums[1]
	assert results[0].losses == results[1].losses
	assert results[0].configs == results[1].configs


def test_fixed_heavy_strategy_matches_plain_training(toy_config, tiny_dataset):
	cfg = quick_config(augment=True, max_iterations=2)
	plain = build_model(seed=0, config=toy_config)
	fixed = build_model(seed=0, config=toy_config)
	plain_result = train(plain, tiny_dataset, cfg, strategy=None, progress=False)
	fixed_result = train(fixed, tiny_dataset, cfg, strategy=parse_strategy('fixed:HHH'), progress=False)
	assert plain.checksum() == fixed.checksum()
	assert plain_result.losses == fixed_result.losses
	assert fixed_result.configs == ['HHH', 'HHH']
	assert plain_result.configs == [None, None]


def test_train_stops_at_max_iterations(toy_model, tiny_dataset, tmp_path):
	metrics = tmp_path / 'metrics.jsonl'
	result = train(toy_model, tiny_dataset, quick_config(epochs=5, max_iterations=3), strategy=parse_strategy('table1'),
				   metrics_path=str(metrics), progress=False)
	assert result.iterations == 3
	assert len(result.losses) == 3

	frame = read_metrics(str(metrics))
	assert frame['event'].tolist() == ['start', 'epoch', 'end']
	epoch = frame[frame['event'] == 'epoch'].iloc[0]
	assert set(epoch['val_dice']) == {'HHH', 'LLL'}
	assert epoch['iterations'] == 3
	assert frame['seed'].iloc[0] == 0
	assert set(result.final_val_dice) == {'HHH', 'LLL'}


def test_train_leaves_model_ready_for_inference(toy_model, tiny_dataset):
	train(toy_model, tiny_dataset, quick_config(max_iterations=1), strategy=parse_strategy('fixed:LLL'),
		  progress=False)
	assert str(current_config(toy_model)) == 'HHH'
	assert not toy_model.training


def test_train_rejects_bad_setups(toy_model, tiny_dataset):
	with pytest.raises(DataError):
		train(toy_model, DatasetSplit(), quick_config(), progress=False)
	with pytest.raises(ConfigError):
		train(strip_pta(toy_model), tiny_dataset, quick_config(), strategy=parse_strategy('table1'), progress=False)


def test_non_finite_forward_stops_training(toy_model, tiny_dataset):
	toy_model.head.bias.data[:] = np.inf
	with pytest.raises(NumericalError):
		train(toy_model, tiny_dataset, quick_config(), progress=False)


def test_evaluate_restores_state(toy_model, tiny_dataset):
	toy_model.train()
	apply_config(toy_model, 'HLH')
	score = evaluate(toy_model, tiny_dataset.val, 'LLL')
	assert 0.0 < score < 1.0
	assert toy_model.training
	assert str(current_config(toy_model)) == 'HLH'
	with pytest.raises(DataError):
		evaluate(toy_model, [], 'HHH')


def test_evaluate_configs_scores_each_config(toy_model, tiny_dataset):
	scores = evaluate_configs(toy_model, tiny_dataset.val, ('HHH', 'lll', 'BBB'))
	assert list(scores) == ['HHH', 'LLL', 'BBB']
	assert scores['HHH'] == evaluate(toy_model, tiny_dataset.val, 'HHH')


@pytest.mark.slow
def test_desk_scale_training_improves_dice():
	dataset = make_synthetic(64, size=64, n_classes=4, seed=0, n_val=16)
	model = build_model(seed=0, config=ModelConfig.toy(4))
	before = evaluate_configs(model.eval(), dataset.val, ('HHH', 'LLL'))
	result = train(model, dataset, TrainConfig(epochs=15, batch_size=8, eval_configs=('HHH', 'LLL')),
				   strategy=parse_strategy('table1'), progress=False)
	after = result.final_val_dice
	assert np.mean(result.losses[-8:]) < np.mean(result.losses[:8])
	assert after['HHH'] > before['HHH']
	assert after['LLL'] > before['LLL']


@pytest.mark.slow
def test_synthetic_task_is_solved_under_every_config():
	dataset = make_synthetic(500, size=64, n_classes=4, seed=0, n_val=100)
	model = build_model(seed=0, config=ModelConfig.toy(4))
	result = train(model, dataset, TrainConfig(epochs=32, batch_size=8, max_iterations=2000, eval_configs=('HHH',)),
				   strategy=parse_strategy('table1'), progress=False)
	assert result.iterations <= 2000
	scores = evaluate_configs(model, dataset.val)
	assert sorted(scores) == ['BBB', 'HHH', 'HHL', 'HLH', 'LHH', 'LLL']
	for config, score in scores.items():
		assert score >= 0.90, config
