#!/usr/bin/env python
# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import unittest
import warnings

# 3rd party packages
import numpy as np

# Project imports
from overlayembed.exceptions import SignatureSyntaxError, DimensionMismatchError, ConfigurationError
from overlayembed.geometry.maps import dist_euclidean, dist_spherical, dist_hyperbolic, base_distance
from overlayembed.spaces.signature import parse_signature, weight_count, overlay_subsets, SINGLE, PRODUCT, \
    OVERLAY, DOT, EXPDOT, AMBIENT_CONVENTION
from overlayembed.spaces.models import ParamLayout, EmbeddingState, ProductModel, OverlayModel, DotModel, \
    build_model, product_distance, overlay_distance, dot_distance
from tests.gradcheck import numerical_gradient, assert_gradient_close, sample_count

GRADIENT_SIGNATURES = (('E4', 4), ('S3', 4), ('H4', 4), ('H2xS1', 4), ('E2xH1xS1', 5), ('H1^2xS1', 4),
                       ('OL0:t=0', 4), ('OL1:t=0', 4), ('OL2:t=0', 4), ('OL0:t=1', 4), ('OL1:t=1', 4),
                       ('OL2:t=1', 4), ('DOT', 4), ('EXPDOT', 4))


def random_state(model, n, rng, theta_scale=0.5):
    state = model.init_state(rng.normal(size=(n, model.d)))
    state.weights[:] = rng.uniform(-theta_scale, theta_scale, size=state.weights.size)
    state.offset[:] = rng.uniform(0.5, 2.0, size=state.offset.size)
    return state


class Test_signature(unittest.TestCase):

    def test_product(self):
        signature = parse_signature("H5xS4", 10)
        self.assertEqual(signature.variant, PRODUCT)
        self.assertEqual([(f.kind, f.dim, f.start, f.stop) for f in signature.factors],
                         [('H', 5, 0, 5), ('S', 4, 5, 10)])
        self.assertEqual(signature.text, "H5xS4")

    def test_single_and_case(self):
        signature = parse_signature("e10", 10)
        self.assertEqual(signature.variant, SINGLE)
        self.assertEqual(signature.text, "E10")

    def test_powers(self):
        signature = parse_signature("H2^5", 10)
        self.assertEqual(len(signature.factors), 5)
        self.assertEqual(signature.factors[-1].start, 8)
        mixed = parse_signature("H2^2xE2xS1^2", 10)
        self.assertEqual([f.label() for f in mixed.factors], ['H2', 'H2', 'E2', 'S1', 'S1'])
        self.assertEqual(mixed.text, "H2^2xE2xS1^2")

    def test_sphere_conventions(self):
        """
        Under the ambient convention S_k occupies k coordinates; the suffix overrides the argument
        :return:
        """
        with self.assertRaises(DimensionMismatchError):
            parse_signature("S10", 10)
        ambient = parse_signature("S10", 10, sphere_convention=AMBIENT_CONVENTION)
        self.assertEqual(ambient.factors[0].ambient, 10)
        self.assertEqual(ambient.canonical_text(), "S10;ambient")
        suffixed = parse_signature("S5^2;ambient", 10)
        self.assertEqual(suffixed.sphere_convention, AMBIENT_CONVENTION)
        self.assertEqual(parse_signature(suffixed.canonical_text(), 10), suffixed)
        self.assertEqual(parse_signature("S9;stored", 10).factors[0].ambient, 10)

    def test_overlay(self):
        signature = parse_signature("OL1:t=1", 10)
        self.assertEqual(signature.variant, OVERLAY)
        self.assertEqual(signature.aggregation, 'l1')
        self.assertEqual(overlay_subsets(10, 1), [(0, 1, 0, 10), (1, 1, 0, 5), (1, 2, 5, 10)])
        terms = signature.overlay_terms()
        self.assertEqual(len(terms), 9)
        self.assertEqual([(t.layer, t.subset, t.kind) for t in terms[:4]],
                         [(0, 1, 'E'), (0, 1, 'S'), (0, 1, 'H'), (1, 1, 'E')])

    def test_overlay_subsets_cover_every_layer(self):
        for d in range(1, 20):
            for depth in range(0, 5):
                if 2 ** depth > d:
                    continue
                for layer in range(depth + 1):
                    bounds = [(start, stop) for l, _, start, stop in overlay_subsets(d, depth) if l == layer]
                    self.assertEqual(bounds[0][0], 0)
                    self.assertEqual(bounds[-1][1], d)
                    for (_, stop), (start, _) in zip(bounds[:-1], bounds[1:]):
                        self.assertEqual(stop, start)

    def test_dot(self):
        self.assertEqual(parse_signature("dot", 10).variant, DOT)
        self.assertEqual(parse_signature("ExpDot", 10).variant, EXPDOT)

    def test_syntax_errors_have_positions(self):
        cases = (("X5", 0), ("E10x", 4), ("H5yS4", 2), ("OL3:t=1", 2), ("OL1:t=", 6), ("H^2", 1))
        for text, position in cases:
            with self.assertRaises(SignatureSyntaxError) as context:
                parse_signature(text, 10)
            self.assertEqual(context.exception.position, position, text)

    def test_dimension_errors(self):
        with self.assertRaises(DimensionMismatchError):
            parse_signature("H5xS4", 9)
        with self.assertRaises(DimensionMismatchError):
            parse_signature("OL1:t=4", 10)
        with self.assertRaises(SignatureSyntaxError):
            parse_signature("S0xE9", 10)
        with self.assertRaises(ConfigurationError):
            parse_signature("E10;upside", 10)

    def test_degenerate_spheres_warn(self):
        with self.assertWarns(UserWarning):
            parse_signature("S1xE9", 10, sphere_convention=AMBIENT_CONVENTION)
        with self.assertWarns(UserWarning):
            parse_signature("OL1:t=2", 5)

    def test_weight_count(self):
        self.assertEqual(weight_count(parse_signature("OL1:t=1", 10)), 9)
        self.assertEqual(weight_count(parse_signature("OL2:t=0", 10)), 3)
        self.assertEqual(weight_count(parse_signature("H5xS4", 10)), 2)
        self.assertEqual(weight_count(parse_signature("E10", 10)), 0)
        self.assertEqual(weight_count(parse_signature("DOT", 10)), 1)

    def test_weight_count_matches_layout(self):
        for text, d in GRADIENT_SIGNATURES + (('OL1:t=3', 10), ('H2^5', 10)):
            signature = parse_signature(text, d)
            layout = build_model(signature).layout(7)
            self.assertEqual(layout.n_scalars, weight_count(signature), text)
            self.assertEqual(layout.size, 7 * d + weight_count(signature))


class Test_parameters(unittest.TestCase):

    def test_views_share_the_flat_vector(self):
        model = build_model(parse_signature("DOT", 3))
        state = model.init_state(np.arange(6.0).reshape(2, 3))
        self.assertEqual(state.layout, ParamLayout(n=2, d=3, n_weights=0, n_offset=1))
        self.assertEqual(state.offset[0], 1.0)
        state.embedding[1, 2] = -1.0
        state.offset[0] = 4.0
        self.assertEqual(state.flat[5], -1.0)
        self.assertEqual(state.flat[6], 4.0)

    def test_initial_weights_are_one(self):
        model = build_model(parse_signature("OL2:t=1", 4))
        state = model.init_state(np.ones((3, 4)))
        np.testing.assert_array_equal(np.exp(state.weights), 1.0)

    def test_layout_mismatch(self):
        layout = ParamLayout(n=2, d=2, n_weights=1)
        with self.assertRaises(DimensionMismatchError):
            EmbeddingState(layout, np.zeros(4))
        with self.assertRaises(DimensionMismatchError):
            EmbeddingState.from_parts(layout, np.zeros((2, 3)), [0.0])


class Test_distances(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_single_factor_reduces_to_base_distance(self):
        x, y = self.rng.normal(size=(2, 6))
        signature = parse_signature("E6", 6)
        self.assertAlmostEqual(product_distance(signature, np.zeros(0), x, y), dist_euclidean(x, y), places=14)

    def test_product_composition(self):
        signature = parse_signature("H5xS4", 10)
        theta = np.array([0.3, -0.4])
        x, y = self.rng.normal(size=(2, 10))
        expected = np.sqrt(np.exp(0.3) * dist_hyperbolic(x[:5], y[:5]) ** 2
                           + np.exp(-0.4) * dist_spherical(x[5:], y[5:]) ** 2)
        self.assertAlmostEqual(product_distance(signature, theta, x, y), expected, places=12)

    def test_identity(self):
        x = self.rng.normal(size=10)
        for text in ("H5xS4", "OL0:t=1", "OL1:t=1", "OL2:t=1", "H2^5"):
            signature = parse_signature(text, 10)
            theta = self.rng.normal(size=weight_count(signature))
            distance = overlay_distance if signature.variant == OVERLAY else product_distance
            self.assertEqual(distance(signature, theta, x, x), 0.0, text)

    def test_overlay_depth_zero_sum(self):
        x, y = self.rng.normal(size=(2, 6))
        signature = parse_signature("OL1:t=0", 6)
        expected = dist_euclidean(x, y) + dist_spherical(x, y) + dist_hyperbolic(x, y)
        self.assertAlmostEqual(overlay_distance(signature, np.zeros(3), x, y), expected, places=12)

    def test_overlay_composition(self):
        """
        Root-sum-of-squares aggregation recomputed term by term from the base distances
        :return:
        """
        x, y = self.rng.normal(size=(2, 10))
        signature = parse_signature("OL2:t=1", 10)
        theta = self.rng.normal(size=9)
        total = 0.0
        for j, (start, stop, kind) in enumerate([(0, 10, k) for k in 'ESH'] + [(0, 5, k) for k in 'ESH']
                                                + [(5, 10, k) for k in 'ESH']):
            total += np.exp(theta[j]) * base_distance(kind, x[start:stop], y[start:stop]) ** 2
        self.assertAlmostEqual(overlay_distance(signature, theta, x, y), np.sqrt(total), places=12)

    def test_overlay_max(self):
        x, y = self.rng.normal(size=(2, 4))
        signature = parse_signature("OL0:t=1", 4)
        model = OverlayModel(signature)
        values, _ = model.term_distances(x[None, :], y[None, :])
        weights = self.rng.uniform(0.5, 2.0, size=9)
        self.assertAlmostEqual(model.distance_with_weights(x, y, weights), np.max(weights * values[0]), places=14)

    def test_dot_scores(self):
        dot = parse_signature("DOT", 2)
        self.assertEqual(dot_distance(dot, [0.0], [1.0, 0.0], [0.0, 3.0]), 0.0)
        self.assertEqual(dot_distance(dot, [5.0], [1.0, 2.0], [3.0, 4.0]), -6.0)
        expdot = parse_signature("EXPDOT", 2)
        self.assertEqual(dot_distance(expdot, [1.0], [1.0, 0.0], [0.0, 3.0]), 1.0)
        self.assertTrue(np.isfinite(dot_distance(expdot, [1.0], [100.0, 0.0], [-100.0, 0.0])))

    def test_wrong_lengths(self):
        signature = parse_signature("E3", 3)
        with self.assertRaises(DimensionMismatchError):
            product_distance(signature, [], [1.0, 2.0], [1.0, 2.0, 3.0])
        with self.assertRaises(DimensionMismatchError):
            product_distance(parse_signature("H3", 3), [0.0, 1.0], np.zeros(3), np.zeros(3))


class Test_overlay_properties(unittest.TestCase):

    def test_metric_axioms(self):
        """
        Every aggregation with positive weights is symmetric, non-negative and satisfies the triangle inequality
        :return:
        """
        rng = np.random.default_rng(21)
        trials = sample_count(60, 1000)
        triples = sample_count(50, 100)
        for trial in range(trials):
            d = int(rng.integers(2, 17))
            depth = int(rng.integers(0, min(2, int(np.log2(d))) + 1))
            aggregation = trial % 3
            with warnings.catch_warnings():
                warnings.simplefilter('ignore')
                model = OverlayModel(parse_signature("OL%i:t=%i" % (aggregation, depth), d))
            weights = rng.uniform(0.1, 3.0, size=len(model.terms))
            x, y, z = rng.uniform(-2.0, 2.0, size=(3, triples, d))
            values = {}
            for name, (a, b) in (('xy', (x, y)), ('yx', (y, x)), ('yz', (y, z)), ('xz', (x, z))):
                terms, _ = model.term_distances(a, b)
                values[name] = model.aggregate(terms, weights)[0]
            np.testing.assert_array_equal(values['xy'], values['yx'])
            self.assertTrue(np.all(values['xy'] >= 0))
            slack = values['xy'] + values['yz'] - values['xz']
            self.assertGreaterEqual(slack.min(), -1e-9)

    def test_product_specialization(self):
        """
        Switching on one space per disjoint subset reproduces the product distance
        :return:
        """
        rng = np.random.default_rng(22)
        model = OverlayModel(parse_signature("OL2:t=1", 10))
        product = parse_signature("H5xE5", 10)
        weights = np.zeros(9)
        weights[5] = 1.0  # layer 1, subset 1, hyperbolic
        weights[6] = 1.0  # layer 1, subset 2, euclidean
        for _ in range(20):
            x, y = rng.normal(size=(2, 10))
            self.assertAlmostEqual(model.distance_with_weights(x, y, weights),
                                   product_distance(product, [0.0], x, y), delta=1e-10)

    def test_scale_covariance(self):
        rng = np.random.default_rng(23)
        x, y = rng.normal(size=(2, 8))
        weights = rng.uniform(0.2, 2.0, size=9)
        scale = 3.7
        for aggregation, factor in ((0, scale), (1, scale), (2, np.sqrt(scale))):
            model = OverlayModel(parse_signature("OL%i:t=1" % aggregation, 8))
            self.assertAlmostEqual(model.distance_with_weights(x, y, scale * weights),
                                   factor * model.distance_with_weights(x, y, weights), places=12)

    def test_rejects_negative_weights(self):
        model = OverlayModel(parse_signature("OL1:t=0", 3))
        with self.assertRaises(ConfigurationError):
            model.distance_with_weights(np.ones(3), np.zeros(3), [1.0, -1.0, 1.0])


class Test_model_gradients(unittest.TestCase):

    def test_finite_differences(self):
        """
        Gradients with respect to both rows and the scalar parameters match central differences
        :return:
        """
        rng = np.random.default_rng(31)
        for text, d in GRADIENT_SIGNATURES:
            model = build_model(parse_signature(text, d))
            for _ in range(sample_count(5, 70)):
                state = random_state(model, 3, rng)
                x, y = state.embedding[0].copy(), state.embedding[1].copy()
                grads = model.model_gradients(state, 0, 1)
                self.assertAlmostEqual(grads['distance'], model.distance(state, x, y), places=14)
                assert_gradient_close(grads['x'], numerical_gradient(lambda p: model.distance(state, p, y), x))
                assert_gradient_close(grads['y'], numerical_gradient(lambda p: model.distance(state, x, p), y))
                scalars = np.concatenate([grads['weights'], grads['offset']])
                if scalars.size:
                    numeric = numerical_gradient(lambda s: model.distance(s, x, y), state.scalars.copy())
                    assert_gradient_close(scalars, numeric)

    def test_sum_aggregation_is_linear(self):
        rng = np.random.default_rng(32)
        model = OverlayModel(parse_signature("OL1:t=1", 4))
        state = model.init_state(rng.normal(size=(2, 4)))
        grads = model.model_gradients(state, 0, 1)
        x, y = state.embedding
        expected = np.zeros(4)
        for term in model.terms:
            expected[term.start:term.stop] += numerical_gradient(
                lambda p: float(base_distance(term.kind, p, y[term.start:term.stop])), x[term.start:term.stop])
        assert_gradient_close(grads['x'], expected)

    def test_max_routes_to_winning_term(self):
        rng = np.random.default_rng(33)
        model = OverlayModel(parse_signature("OL0:t=1", 4))
        state = model.init_state(rng.normal(size=(2, 4)))
        state.weights[:] = -5.0
        state.weights[5] = 5.0  # layer 1, subset 1, hyperbolic
        grads = model.model_gradients(state, 0, 1)
        self.assertTrue(np.any(grads['x'][:2] != 0))
        np.testing.assert_array_equal(grads['x'][2:], 0.0)
        self.assertEqual(np.count_nonzero(grads['weights']), 1)
        self.assertNotEqual(grads['weights'][5], 0.0)

    def test_batched_backward_matches_pairwise(self):
        """
        Accumulated gradients over many pairs equal the sum of the single-pair gradients
        :return:
        """
        rng = np.random.default_rng(34)
        model = build_model(parse_signature("OL2:t=1", 4))
        state = random_state(model, 5, rng)
        rows = np.array([0, 1, 2, 0, 4])
        cols = np.array([1, 2, 3, 4, 3])
        upstream = rng.normal(size=5)
        grad = model.backward(model.evaluate(state, rows, cols), upstream, state.layout)
        expected = np.zeros(state.layout.size)
        d = state.layout.d
        for k, (i, j) in enumerate(zip(rows, cols)):
            single = model.model_gradients(state, i, j)
            expected[i * d:(i + 1) * d] += upstream[k] * single['x']
            expected[j * d:(j + 1) * d] += upstream[k] * single['y']
            expected[5 * d:] += upstream[k] * single['weights']
        np.testing.assert_allclose(grad, expected, rtol=1e-12, atol=1e-14)


class Test_describe_weights(unittest.TestCase):

    def test_overlay_table(self):
        model = OverlayModel(parse_signature("OL1:t=1", 10))
        state = model.init_state(np.ones((2, 10)))
        table = model.describe_weights(state)
        self.assertEqual(len(table), 9)
        self.assertEqual(list(table['space'][:3]), ['E', 'S', 'H'])
        self.assertEqual(table['coordinates'].iloc[-1], '6-10')
        np.testing.assert_array_equal(table['weight'], 1.0)

    def test_product_and_dot_tables(self):
        product = ProductModel(parse_signature("H5xE5", 10))
        table = product.describe_weights(product.init_state(np.ones((2, 10))))
        self.assertEqual(list(table['factor']), ['H5', 'E5'])
        self.assertEqual(table['weight'].iloc[1], 1.0)
        dot = DotModel(parse_signature("DOT", 3))
        self.assertEqual(dot.describe_weights(dot.init_state(np.ones((2, 3))))['value'].iloc[0], 1.0)
