"""
Tests for reference elements, quadrature and the reference-to-physical map
"""

from django.test import SimpleTestCase
import numpy as np

from fsi_lab.exceptions import InvertedElementError
from .elements import reference_element, shape_values, ELEMENT_KINDS
from .quadrature import quadrature_rule
from .mapping import physical_gradients


class ReferenceElementTest(SimpleTestCase):
    """Test basis functions on every reference element"""

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def _random_points(self, elem, count=100):
        if elem.domain == 'box':
            return self.rng.uniform(-1.0, 1.0, size=(count, elem.dim))
        pts = self.rng.uniform(0.0, 1.0, size=(count, elem.dim))
        return pts / (1.0 + pts.sum(axis=1, keepdims=True))

    def test_node_counts(self):
        """Test node counts of the supported elements"""
        expected = {'q2_quad': 9, 'q2_hex': 27, 'q1_quad': 4, 'q1_hex': 8,
                    'p1_triangle': 3, 'p1_tetrahedron': 4}
        for kind, count in expected.items():
            self.assertEqual(reference_element(kind).node_count, count)
        self.assertEqual(reference_element('pressure_q1_plus_p0', 2).node_count, 5)
        self.assertEqual(reference_element('pressure_q1_plus_p0', 3).node_count, 9)

    def test_partition_of_unity(self):
        """Test values sum to one and gradients to zero"""
        for kind in ELEMENT_KINDS:
            if kind == 'pressure_q1_plus_p0':
                continue
            elem = reference_element(kind)
            values, grads = shape_values(elem, self._random_points(elem))
            np.testing.assert_allclose(values.sum(axis=1), 1.0, atol=1e-13)
            np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-13)

    def test_kronecker_property(self):
        """Test each basis function is one at its own node and zero elsewhere"""
        for kind in ('q2_quad', 'q2_hex', 'q1_quad', 'q1_hex', 'p1_triangle', 'p1_tetrahedron'):
            elem = reference_element(kind)
            values, _ = shape_values(elem, elem.local_node_coords)
            np.testing.assert_allclose(values, np.eye(elem.node_count), atol=1e-14)

    def test_first_axis_runs_fastest(self):
        """Test the second node of the Q2 quad sits at (0, -1)"""
        elem = reference_element('q2_quad')
        np.testing.assert_array_equal(elem.local_node_coords[1], [0.0, -1.0])
        np.testing.assert_array_equal(elem.local_node_coords[3], [-1.0, 0.0])

    def test_q2_reproduces_quadratics(self):
        """Test Q2 interpolation of random biquadratics is exact with exact gradients"""
        elem = reference_element('q2_quad')
        nodes = elem.local_node_coords
        pts = self._random_points(elem, 100)
        values, grads = shape_values(elem, pts)
        powers = np.arange(3)
        for _ in range(5):
            coeffs = self.rng.normal(size=(3, 3))

            def f(p):
                return np.einsum('ij,ni,nj->n', coeffs,
                                 p[:, :1] ** powers, p[:, 1:] ** powers)

            def grad_f(p):
                dx = np.einsum('ij,ni,nj->n', coeffs[1:] * powers[1:, None],
                               p[:, :1] ** powers[:2], p[:, 1:] ** powers)
                dy = np.einsum('ij,ni,nj->n', coeffs[:, 1:] * powers[1:],
                               p[:, :1] ** powers, p[:, 1:] ** powers[:2])
                return np.column_stack([dx, dy])

            np.testing.assert_allclose(values @ f(nodes), f(pts), atol=1e-12)
            grad = np.einsum('qnd,n->qd', grads, f(nodes))
            np.testing.assert_allclose(grad, grad_f(pts), atol=1e-12)

    def test_pressure_constant_mode(self):
        """Test the enriched pressure element appends a constant function"""
        elem = reference_element('pressure_q1_plus_p0', 2)
        self.assertTrue(elem.has_constant_mode)
        values, grads = shape_values(elem, np.array([0.3, -0.2]))
        self.assertEqual(values[-1], 1.0)
        np.testing.assert_array_equal(grads[-1], 0.0)
        self.assertAlmostEqual(values[:4].sum(), 1.0)

    def test_single_point_shapes(self):
        """Test a single point returns unbatched arrays"""
        values, grads = shape_values(reference_element('q2_hex'), np.zeros(3))
        self.assertEqual(values.shape, (27,))
        self.assertEqual(grads.shape, (27, 3))

    def test_unknown_kind(self):
        """Test unknown element kinds are rejected"""
        with self.assertRaises(ValueError):
            reference_element('p2_triangle')
        with self.assertRaises(ValueError):
            shape_values(reference_element('q2_quad'), np.zeros(3))


class QuadratureTest(SimpleTestCase):
    """Test quadrature exactness on boxes and simplices"""

    def test_weights_positive_and_sum_to_measure(self):
        """Test weights are positive and integrate one exactly"""
        measures = {'q2_quad': 4.0, 'q2_hex': 8.0, 'p1_triangle': 0.5,
                    'p1_tetrahedron': 1.0 / 6.0}
        for kind, measure in measures.items():
            for order in range(0, 5):
                rule = quadrature_rule(kind, order)
                self.assertTrue(np.all(rule.weights > 0.0))
                self.assertAlmostEqual(rule.weights.sum(), measure, places=13)

    def test_box_exactness(self):
        """Test Gauss rules integrate x^4 y^5 exactly to zero and x^4 y^4"""
        rule = quadrature_rule('q2_quad', 5)
        x, y = rule.points[:, 0], rule.points[:, 1]
        self.assertAlmostEqual(rule.weights @ (x ** 4 * y ** 4), (2.0 / 5.0) ** 2, places=13)
        self.assertAlmostEqual(rule.weights @ (x ** 4 * y ** 5), 0.0, places=13)

    def test_triangle_exactness(self):
        """Test the degree-4 triangle rule on x^2 y^2 (exact value 1/180)"""
        rule = quadrature_rule('p1_triangle', 4)
        x, y = rule.points[:, 0], rule.points[:, 1]
        self.assertAlmostEqual(rule.weights @ (x ** 2 * y ** 2), 1.0 / 180.0, places=12)
        self.assertAlmostEqual(rule.weights @ x ** 4, 1.0 / 30.0, places=12)

    def test_tetrahedron_exactness(self):
        """Test tetrahedron rules on x y z (exact 1/720) and x^2 (exact 1/60)"""
        rule = quadrature_rule('p1_tetrahedron', 2)
        self.assertAlmostEqual(rule.weights @ rule.points[:, 0] ** 2, 1.0 / 60.0, places=13)
        rule = quadrature_rule('p1_tetrahedron', 3)
        x, y, z = rule.points.T
        self.assertAlmostEqual(rule.weights @ (x * y * z), 1.0 / 720.0, places=13)

    def test_unsupported_order(self):
        """Test orders beyond the available rules raise"""
        with self.assertRaises(ValueError):
            quadrature_rule('q2_quad', 9)
        with self.assertRaises(ValueError):
            quadrature_rule('p1_triangle', 5)
        with self.assertRaises(ValueError):
            quadrature_rule('prism', 2)


class PhysicalGradientTest(SimpleTestCase):
    """Test mapping gradients to physical coordinates"""

    def test_scaled_square(self):
        """Test a Q1 map of [0, 2] x [0, 1] halves and doubles the gradients"""
        elem = reference_element('q1_quad')
        coords = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [2.0, 1.0]])
        _, ref = shape_values(elem, np.zeros(2))
        phys, det = physical_gradients(coords, ref)
        self.assertAlmostEqual(det, 0.5)
        np.testing.assert_allclose(phys[:, 0], ref[:, 0] / 1.0)
        np.testing.assert_allclose(phys[:, 1], ref[:, 1] * 2.0)

    def test_linear_triangle_gradients(self):
        """Test P1 gradients reproduce the gradient of a linear field"""
        elem = reference_element('p1_triangle')
        coords = np.array([[0.1, 0.2], [1.3, 0.4], [0.2, 1.5]])
        _, ref = shape_values(elem, np.array([0.2, 0.2]))
        phys, det = physical_gradients(coords, ref)
        field = coords @ np.array([3.0, -2.0]) + 1.0
        np.testing.assert_allclose(field @ phys, [3.0, -2.0], atol=1e-12)
        self.assertGreater(det, 0.0)

    def test_batched_shapes(self):
        """Test batched elements and points keep both axes"""
        elem = reference_element('q2_quad')
        rule = quadrature_rule('q2_quad', 4)
        _, ref = shape_values(elem, rule.points)
        coords = np.stack([0.5 * (elem.local_node_coords + 1.0)] * 3)
        phys, det = physical_gradients(coords, ref)
        self.assertEqual(phys.shape, (3, len(rule), 9, 2))
        np.testing.assert_allclose(det, 0.25)

    def test_inverted_element(self):
        """Test a mirrored element raises InvertedElementError with its index"""
        elem = reference_element('p1_triangle')
        good = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        bad = good[[0, 2, 1]]
        _, ref = shape_values(elem, np.array([0.3, 0.3]))
        with self.assertRaises(InvertedElementError) as ctx:
            physical_gradients(np.stack([good, bad]), ref)
        self.assertEqual(ctx.exception.element, 1)
