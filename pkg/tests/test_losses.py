#!/usr/bin/env python
# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import unittest
import warnings

# 3rd party packages
import numpy as np

# Project imports
from overlayembed.exceptions import ConfigurationError, DomainError, DataError
from overlayembed.graph.io import Graph, DistanceMatrix
from overlayembed.graph.paths import shortest_paths
from overlayembed.losses.objectives import LossSpec, convert, log_score, distortion_loss, proxy_loss, \
    distortion_pairs, loss_and_gradient, DISTORTION, PROXY
from overlayembed.metrics.evaluation import distortion_metric
from overlayembed.spaces.models import EmbeddingState, build_model
from overlayembed.spaces.signature import parse_signature
from tests.gradcheck import numerical_gradient, assert_gradient_close

CYCLE_WITH_CHORD = Graph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)])


def model_and_state(text, d, n, seed):
    model = build_model(parse_signature(text, d))
    rng = np.random.default_rng(seed)
    state = model.init_state(rng.normal(size=(n, d)))
    state.weights[:] = rng.uniform(-0.3, 0.3, size=state.weights.size)
    return model, state


def loss_of_flat(function, state):
    return lambda flat: function(EmbeddingState(state.layout, flat))[0]


class Test_conversions(unittest.TestCase):

    def test_t1(self):
        self.assertEqual(convert('t1', 0.0), 1.0)
        self.assertAlmostEqual(convert('t1', np.log(2.0)), 0.5, places=15)

    def test_floored_reading(self):
        """
        The default reading floors the distance at d0 for t2 and t3
        :return:
        """
        self.assertAlmostEqual(convert('t3', 0.5), 2.0, places=12)
        self.assertAlmostEqual(convert('t3', 0.0), 100.0, places=9)
        self.assertAlmostEqual(convert('t2', 0.5), np.exp(2.0), places=12)
        self.assertAlmostEqual(float(log_score('t2', 0.0)[0]), 100.0, places=12)
        scores = convert('t3', np.array([0.1, 0.2, 0.4]))
        self.assertTrue(np.all(np.diff(scores) < 0))

    def test_literal_reading(self):
        self.assertAlmostEqual(convert('t3', 0.5, reading='literal'), 100.0, places=9)
        self.assertAlmostEqual(convert('t3', 0.005, reading='literal'), 200.0, places=9)
        with self.assertRaises(DomainError):
            convert('t2', 0.0, reading='literal')

    def test_negative_distances(self):
        for conversion in ('t2', 't3'):
            with self.assertRaises(DomainError):
                convert(conversion, -0.1)
        self.assertAlmostEqual(convert('t1', -1.0), np.e, places=14)

    def test_derivatives(self):
        d = np.array([0.05, 0.3, 1.7])
        for conversion in ('t1', 't2', 't3'):
            _, slope = log_score(conversion, d)
            for k in range(3):
                numeric = numerical_gradient(lambda x: float(log_score(conversion, x)[0][0]), d[k:k + 1])
                assert_gradient_close(slope[k:k + 1], numeric)

    def test_invalid_spec(self):
        with self.assertRaises(ConfigurationError):
            LossSpec(kind='hinge')
        with self.assertRaises(ConfigurationError):
            LossSpec(kind=PROXY, conversion='t4')
        with self.assertRaises(ConfigurationError):
            LossSpec(kind=PROXY, d0=0.0)
        with self.assertRaises(ConfigurationError):
            LossSpec(pair_sample=-1)


class Test_distortion_loss(unittest.TestCase):

    def test_hand_evaluation(self):
        model = build_model(parse_signature("E1", 1))
        state = model.init_state(np.array([[0.0], [1.0], [2.0]]))
        targets = DistanceMatrix(np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]]))
        loss, _ = distortion_loss(model, state, targets, (np.array([0, 1]), np.array([1, 2])))
        self.assertAlmostEqual(loss, 0.25, places=15)

    def test_matches_distortion_metric(self):
        """
        Over all pairs the training loss is the same average the distortion metric reports
        :return:
        """
        targets = shortest_paths(CYCLE_WITH_CHORD)
        for text, d in (('E3', 3), ('OL1:t=1', 4)):
            model, state = model_and_state(text, d, 6, 9)
            loss, _ = distortion_loss(model, state, targets, distortion_pairs(6, LossSpec()))
            self.assertAlmostEqual(loss, distortion_metric(model, state, targets), places=12)

    def test_perfect_embedding(self):
        points = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
        model = build_model(parse_signature("E2", 2))
        state = model.init_state(points)
        targets = DistanceMatrix(np.linalg.norm(points[:, None] - points[None], axis=2))
        loss, grad = distortion_loss(model, state, targets, distortion_pairs(3, LossSpec()))
        self.assertEqual(loss, 0.0)
        np.testing.assert_array_equal(grad, 0.0)

    def test_zero_target(self):
        model, state = model_and_state("E2", 2, 2, 0)
        with self.assertRaises(DataError):
            distortion_loss(model, state, DistanceMatrix(np.zeros((2, 2))), (np.array([0]), np.array([1])))

    def test_gradients(self):
        """
        Loss gradients over the flat parameter vector match central differences for every model family
        :return:
        """
        targets = shortest_paths(CYCLE_WITH_CHORD)
        pairs = distortion_pairs(6, LossSpec())
        for text, d in (('E3', 3), ('H1xS1', 3), ('OL0:t=1', 4), ('OL1:t=1', 4), ('OL2:t=1', 4), ('DOT', 3),
                        ('EXPDOT', 3)):
            model, state = model_and_state(text, d, 6, 1)
            loss, grad = distortion_loss(model, state, targets, pairs)
            numeric = numerical_gradient(
                loss_of_flat(lambda s: distortion_loss(model, s, targets, pairs), state), state.flat)
            assert_gradient_close(grad, numeric)

    def test_relabeling_invariance(self):
        model, state = model_and_state("H2xE2", 4, 6, 2)
        targets = shortest_paths(CYCLE_WITH_CHORD)
        permutation = np.array([3, 0, 5, 1, 4, 2])
        permuted_targets = DistanceMatrix(targets.d[np.ix_(permutation, permutation)])
        permuted_state = EmbeddingState.from_parts(state.layout, state.embedding[permutation], state.scalars)
        loss, _ = distortion_loss(model, state, targets, distortion_pairs(6, LossSpec()))
        permuted, _ = distortion_loss(model, permuted_state, permuted_targets, distortion_pairs(6, LossSpec()))
        self.assertAlmostEqual(loss, permuted, places=13)

    def test_pair_policy(self):
        rows, cols = distortion_pairs(50, LossSpec())
        self.assertEqual(len(rows), 50 * 49 // 2)
        self.assertTrue(np.all(rows < cols))
        rows, cols = distortion_pairs(2500, LossSpec(), seed=3, iteration=7)
        self.assertEqual(len(rows), 10 ** 6)
        self.assertTrue(np.all(rows < cols))
        again, _ = distortion_pairs(2500, LossSpec(), seed=3, iteration=7)
        other, _ = distortion_pairs(2500, LossSpec(), seed=3, iteration=8)
        np.testing.assert_array_equal(rows, again)
        self.assertFalse(np.array_equal(rows, other))
        rows, _ = distortion_pairs(50, LossSpec(pair_sample=100))
        self.assertEqual(len(rows), 100)

    def test_thread_count_does_not_change_result(self):
        model, state = model_and_state("OL1:t=1", 4, 300, 3)
        rng = np.random.default_rng(3)
        points = rng.normal(size=(300, 2))
        targets = DistanceMatrix(np.linalg.norm(points[:, None] - points[None], axis=2) + 0.1 * (1.0 - np.eye(300)))
        pairs = distortion_pairs(300, LossSpec())
        single = distortion_loss(model, state, targets, pairs, threads=1)
        parallel = distortion_loss(model, state, targets, pairs, threads=4)
        self.assertEqual(single[0], parallel[0])
        np.testing.assert_array_equal(single[1], parallel[1])


class Test_proxy_loss(unittest.TestCase):

    def test_two_nodes_at_zero_distance(self):
        graph = Graph.from_edges(2, [(0, 1)])
        model = build_model(parse_signature("E2", 2))
        state = model.init_state(np.full((2, 2), 0.5))
        loss, _ = proxy_loss(model, state, graph, LossSpec(kind=PROXY))
        self.assertAlmostEqual(loss, 2.0 * np.log(2.0), places=14)

    def test_excluding_self(self):
        graph = Graph.from_edges(2, [(0, 1)])
        model = build_model(parse_signature("E2", 2))
        state = model.init_state(np.array([[0.0, 0.0], [1.0, 0.0]]))
        loss, _ = proxy_loss(model, state, graph, LossSpec(kind=PROXY, exclude_self=True))
        self.assertAlmostEqual(loss, 0.0, places=14)

    def test_gradients(self):
        for text, d, conversion, exclude_self in (('E3', 3, 't1', False), ('H1xS1', 3, 't1', True),
                                                  ('OL2:t=1', 4, 't1', False), ('OL0:t=1', 4, 't2', False),
                                                  ('H3', 3, 't3', False), ('DOT', 3, 't1', False),
                                                  ('EXPDOT', 3, 't1', True)):
            spec = LossSpec(kind=PROXY, conversion=conversion, exclude_self=exclude_self)
            model, state = model_and_state(text, d, 6, 4)
            loss, grad = proxy_loss(model, state, CYCLE_WITH_CHORD, spec)
            numeric = numerical_gradient(
                loss_of_flat(lambda s: proxy_loss(model, s, CYCLE_WITH_CHORD, spec), state), state.flat)
            assert_gradient_close(grad, numeric)

    def test_sampled_denominators(self):
        """
        Sampled denominators are reproducible for a seed and differentiable like the full loss
        :return:
        """
        spec = LossSpec(kind=PROXY, denominator_sample=4)
        model, state = model_and_state("E2", 2, 6, 5)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore')
            first = proxy_loss(model, state, CYCLE_WITH_CHORD, spec, seed=1, iteration=2)
            second = proxy_loss(model, state, CYCLE_WITH_CHORD, spec, seed=1, iteration=2)
            numeric = numerical_gradient(
                loss_of_flat(lambda s: proxy_loss(model, s, CYCLE_WITH_CHORD, spec, seed=1, iteration=2), state),
                state.flat)
        self.assertEqual(first[0], second[0])
        assert_gradient_close(first[1], numeric)
        with self.assertWarns(UserWarning):
            proxy_loss(model, state, CYCLE_WITH_CHORD, spec)

    def test_closer_edge_lowers_loss(self):
        graph = Graph.from_edges(3, [(0, 1), (1, 2)])
        model = build_model(parse_signature("E1", 1))
        far = proxy_loss(model, model.init_state(np.array([[0.0], [1.0], [3.0]])), graph, LossSpec(kind=PROXY))[0]
        near = proxy_loss(model, model.init_state(np.array([[0.0], [1.0], [2.5]])), graph, LossSpec(kind=PROXY))[0]
        self.assertLess(near, far)

    def test_shift_invariance(self):
        """
        Shifting every score by the dot offset leaves the t1 loss unchanged
        :return:
        """
        model, state = model_and_state("DOT", 3, 6, 6)
        spec = LossSpec(kind=PROXY)
        loss, grad = proxy_loss(model, state, CYCLE_WITH_CHORD, spec)
        shifted = state.copy()
        shifted.offset[0] += 7.5
        self.assertAlmostEqual(proxy_loss(model, shifted, CYCLE_WITH_CHORD, spec)[0], loss, places=10)
        self.assertAlmostEqual(grad[-1], 0.0, places=10)

    def test_dot_rejects_t2_t3(self):
        model, state = model_and_state("DOT", 3, 6, 7)
        with self.assertRaises(DomainError):
            proxy_loss(model, state, CYCLE_WITH_CHORD, LossSpec(kind=PROXY, conversion='t3'))

    def test_dispatch(self):
        model, state = model_and_state("E2", 2, 6, 8)
        targets = shortest_paths(CYCLE_WITH_CHORD)
        loss, _ = loss_and_gradient(model, state, LossSpec(kind=DISTORTION), targets=targets)
        expected, _ = distortion_loss(model, state, targets, distortion_pairs(6, LossSpec()))
        self.assertEqual(loss, expected)
        with self.assertRaises(ConfigurationError):
            loss_and_gradient(model, state, LossSpec(kind=PROXY))
