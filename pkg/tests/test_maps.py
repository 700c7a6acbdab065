"""Block-chain maps: forward/inverse, Jacobians, densities, certificates,
parameter flattening and JSON serialization."""

import json

import numpy as np
import pytest

import warpbasis as wb
from warpbasis.lipnet import LipMlp
from warpbasis.maps import (dumps, forward_jacobian_params, from_jsonable,
                            loads, num_parameters, parameter_vector,
                            specs_equal, to_jsonable, with_parameters)
from conftest import random_chain


def zero_net(lipschitz: float = 0.5) -> LipMlp:
    return wb.constrain(LipMlp(weights=(np.zeros((4, 1)), np.zeros((1, 4))),
                               biases=(np.zeros(4), np.zeros(1)),
                               target_lipschitz=lipschitz))


class TestForward:
    def test_identity_chain(self):
        assert wb.map_forward(wb.identity_map(), 1.7) == 1.7

    def test_pure_shift(self):
        m = wb.shift_map(-3.0)
        for x in (-1.0, 0.0, 4.2):
            assert wb.map_forward(m, x) == x - 3.0

    def test_zero_net_residual_is_identity(self):
        m = wb.MapSpec(blocks=(wb.ResidualBlock(zero_net()),))
        assert wb.map_forward(m, 0.4) == 0.4

    def test_blocks_apply_left_to_right(self):
        # residual-then-affine realizes alpha * (x + NN(x)) + beta
        net = wb.random_net(hidden=4, lipschitz=0.5, seed=7)
        m = wb.MapSpec(blocks=(wb.ResidualBlock(net), wb.AffineBlock(2.0, 1.0)))
        x = 0.7
        want = 2.0 * (x + wb.mlp_eval(net, x)) + 1.0
        assert wb.map_forward(m, x) == pytest.approx(want, rel=1e-15)


class TestInverse:
    def test_affine_closed_form(self):
        m = wb.MapSpec(blocks=(wb.AffineBlock(2.0, 1.0),))
        assert wb.map_inverse(m, 5.0) == pytest.approx(2.0, abs=1e-14)

    def test_zero_net_residual(self):
        m = wb.MapSpec(blocks=(wb.ResidualBlock(zero_net()),))
        assert wb.map_inverse(m, 0.9) == pytest.approx(0.9, abs=1e-13)

    def test_residual_round_trip(self):
        net = wb.random_net(hidden=8, lipschitz=0.5, seed=4)
        m = wb.MapSpec(blocks=(wb.ResidualBlock(net),))
        for y in (-2.0, 0.0, 3.0):
            x = wb.map_inverse(m, y, tol=1e-13)
            assert abs(wb.map_forward(m, x) - y) < 1e-12

    def test_non_convergence_signalled(self):
        net = wb.random_net(hidden=8, lipschitz=0.5, seed=1)
        m = wb.MapSpec(blocks=(wb.ResidualBlock(net),))
        with pytest.raises(wb.NonConvergenceError):
            wb.map_inverse(m, 3.0, tol=1e-12, max_iters=2)

    def test_round_trip_property(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            m = random_chain(rng)
            x = rng.uniform(-10, 10, 200)
            back = wb.map_inverse(m, wb.map_forward(m, x), tol=1e-12)
            assert np.abs(back - x).max() < 1e-10


class TestJacobian:
    def test_shift_has_unit_jacobian(self):
        m = wb.shift_map(-2.0)
        grid = np.linspace(-5, 5, 11)
        np.testing.assert_array_equal(wb.jacobian_det(m, grid), np.ones(11))

    def test_affine_constant(self):
        m = wb.scaling_map(2.0)
        assert wb.jacobian_det(m, 0.3) == 2.0

    def test_residual_range_and_finite_difference(self):
        net = wb.random_net(hidden=8, lipschitz=0.5, seed=8)
        m = wb.MapSpec(blocks=(wb.ResidualBlock(net),))
        h = 1e-6
        for x in (-2.0, 0.1, 3.3):
            d = wb.jacobian_det(m, x)
            assert 0.5 <= d <= 1.5
            fd = (wb.map_forward(m, x + h) - wb.map_forward(m, x - h)) / (2 * h)
            assert d == pytest.approx(fd, abs=1e-7)


class TestDensity:
    def test_shift_is_measure_preserving(self):
        m = wb.shift_map(-2.0)
        grid = np.linspace(-4, 4, 9)
        np.testing.assert_array_equal(
            wb.density(m, wb.DensityKind.PUSH_FORWARD, grid), np.ones(9))

    def test_affine_matches_change_of_variables(self):
        c, beta = 2.5, 0.7
        m = wb.scaling_map(c, beta)
        # oracle: mass of the pre-image of an interval B under h over |B|
        lo, hi = -1.0, 3.0
        preimage_mass = ((hi - beta) / c) - ((lo - beta) / c)
        assert wb.density(m, wb.DensityKind.PUSH_FORWARD, 0.0) == pytest.approx(
            preimage_mass / (hi - lo), rel=1e-14)

    def test_identity_inverse_density(self):
        m = wb.identity_map()
        assert wb.density(m, wb.DensityKind.INVERSE_PUSH_FORWARD, 1.3) == 1.0

    def test_density_identity_on_grid(self):
        rng = np.random.default_rng(17)
        grid = np.linspace(-8, 8, 101)
        for _ in range(4):
            m = random_chain(rng)
            product = (wb.density(m, wb.DensityKind.PUSH_FORWARD, grid)
                       * wb.density(m, wb.DensityKind.INVERSE_PUSH_FORWARD, grid))
            np.testing.assert_allclose(product, 1.0, atol=1e-10)


class TestLipschitzInterval:
    def test_identity(self):
        assert wb.lipschitz_interval(wb.identity_map()) == (1.0, 1.0)

    def test_interval_product(self):
        m = wb.MapSpec(blocks=(wb.AffineBlock(2.0, 0.0),
                               wb.ResidualBlock(zero_net(lipschitz=0.25))))
        np.testing.assert_allclose(wb.lipschitz_interval(m), (1.5, 2.5), rtol=1e-15)

    def test_residual_interval(self):
        m = wb.MapSpec(blocks=(wb.ResidualBlock(zero_net(lipschitz=0.9)),))
        np.testing.assert_allclose(wb.lipschitz_interval(m), (0.1, 1.9), rtol=1e-12)

    def test_empirical_ratios_inside_certificate(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            m = random_chain(rng)
            r, R = wb.lipschitz_interval(m)
            x = rng.uniform(-10, 10, 10_000)
            y = rng.uniform(-10, 10, 10_000)
            keep = np.abs(x - y) > 1e-8
            q = np.abs(wb.map_forward(m, x[keep]) - wb.map_forward(m, y[keep]))
            q = q / np.abs(x[keep] - y[keep])
            assert q.min() >= r - 1e-9
            assert q.max() <= R + 1e-9

    def test_monotone_increasing(self):
        rng = np.random.default_rng(3)
        grid = np.linspace(-10, 10, 500)
        for _ in range(4):
            m = random_chain(rng)
            assert np.all(np.diff(wb.map_forward(m, grid)) > 0)


class TestValidation:
    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError):
            wb.AffineBlock(alpha=0.0, beta=1.0)
        with pytest.raises(ValueError):
            wb.AffineBlock(alpha=-2.0, beta=0.0)

    def test_unconstrained_net_rejected(self):
        raw = LipMlp(weights=(np.array([[0.2]]),), biases=(np.zeros(1),),
                     target_lipschitz=0.5)
        with pytest.raises(ValueError):
            wb.ResidualBlock(net=raw)

    def test_unsupported_dimension(self):
        with pytest.raises(wb.UnsupportedDimensionError):
            wb.MapSpec(blocks=(), dimension=2)


class TestParameters:
    def test_round_trip(self):
        m = wb.residual_affine_template(hidden=6, lipschitz=0.8, seed=5,
                                        alpha=1.5, beta=-0.2)
        vec = parameter_vector(m)
        assert vec.size == num_parameters(m)
        clone = with_parameters(m, vec)
        assert specs_equal(m, clone)

    def test_alpha_floor_keeps_map_valid(self):
        m = wb.scaling_map(1.0)
        vec = np.array([-5.0, 0.3])
        clamped = with_parameters(m, vec)
        assert clamped.blocks[0].alpha == 1e-6

    def test_forward_jacobian_params_matches_finite_differences(self):
        m = wb.residual_affine_template(hidden=4, lipschitz=0.6, seed=9,
                                        alpha=1.2, beta=0.4)
        x = np.array([-1.1, 0.0, 0.8])
        u, d, du, dd = forward_jacobian_params(m, x)
        np.testing.assert_allclose(u, wb.map_forward(m, x), rtol=1e-14)
        np.testing.assert_allclose(d, wb.jacobian_det(m, x), rtol=1e-14)
        params = parameter_vector(m)
        h = 1e-6
        for i in range(params.size):
            bump = params.copy()
            bump[i] += h
            # bypass re-constraining so the finite difference probes the raw
            # parameterization that forward_jacobian_params differentiates
            hi = _raw_with_parameters(m, bump)
            bump[i] -= 2 * h
            lo = _raw_with_parameters(m, bump)
            fd_u = (wb.map_forward(hi, x) - wb.map_forward(lo, x)) / (2 * h)
            fd_d = (wb.jacobian_det(hi, x) - wb.jacobian_det(lo, x)) / (2 * h)
            np.testing.assert_allclose(du[i], fd_u, atol=2e-7)
            np.testing.assert_allclose(dd[i], fd_d, atol=2e-6)


def _raw_with_parameters(m: wb.MapSpec, vec: np.ndarray) -> wb.MapSpec:
    """with_parameters minus the constraint projection, for derivative checks."""
    blocks, pos = [], 0
    for block in m.blocks:
        if isinstance(block, wb.AffineBlock):
            blocks.append(wb.AffineBlock(alpha=float(vec[pos]), beta=float(vec[pos + 1])))
            pos += 2
        else:
            n = block.net.num_params
            net = block.net.with_params(vec[pos:pos + n])
            object.__setattr__(net, "spectral_norms", block.net.spectral_norms)
            blocks.append(wb.ResidualBlock(net=net))
            pos += n
    return wb.MapSpec(blocks=tuple(blocks))


class TestSerialization:
    def test_round_trip_bit_faithful(self):
        m = wb.MapSpec(blocks=(
            wb.ResidualBlock(wb.random_net(hidden=8, lipschitz=0.9, seed=0)),
            wb.AffineBlock(alpha=1.0 / 3.0, beta=-0.12345678901234567),
        ))
        text = dumps(m)
        clone = loads(text)
        assert specs_equal(m, clone)
        assert dumps(clone) == text

    def test_round_trip_extreme_floats(self):
        m = wb.MapSpec(blocks=(wb.AffineBlock(alpha=5.551115123125783e-17,
                                              beta=-1.7976931348623157e+308),))
        clone = loads(dumps(m))
        assert clone.blocks[0].alpha == m.blocks[0].alpha
        assert clone.blocks[0].beta == m.blocks[0].beta

    def test_file_round_trip(self, tmp_path):
        m = wb.residual_affine_template(hidden=5, lipschitz=0.7, seed=12)
        path = tmp_path / "map.json"
        wb.save_map(m, path)
        assert specs_equal(wb.load_map(path), m)

    def test_wire_format_shape(self):
        m = wb.residual_affine_template(hidden=3, lipschitz=0.5, seed=1,
                                        alpha=2.0, beta=0.5)
        data = json.loads(dumps(m))
        assert data["dimension"] == 1
        res, aff = data["blocks"]
        assert set(aff["affine"]) == {"alpha", "beta"}
        assert res["residual"]["activation"] == "tanh"
        assert res["residual"]["lipschitz"] == 0.5
        assert [len(layer["b"]) for layer in res["residual"]["layers"]] == [3, 1]

    def test_malformed_payloads_rejected(self):
        with pytest.raises(ValueError):
            from_jsonable({"no_blocks": []})
        with pytest.raises(ValueError):
            from_jsonable({"dimension": 1, "blocks": [{"mystery": {}}]})
        with pytest.raises(ValueError):
            from_jsonable({"dimension": 1, "blocks": [
                {"residual": {"lipschitz": 0.5, "activation": "relu",
                              "layers": [{"w": [[0.1]], "b": [0.0]}]}}]})
