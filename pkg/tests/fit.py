import unittest, math

from .utils import FtlabTest
from ftlab.fit import FitConstants, fibonacci, load_constants, reference, c4c6_curve, surface_curve, steane_curve, \
  c4_steane_curve, hamming_curve, fit_fixed_exponent, fit_power_law, fit_c4c6, fit_c4c6_levels, \
  critical_curve, fit_critical_exponent, thresholds
import numpy as np

P = [1e-4, 3e-4, 1e-3, 3e-3]

class TestFit(FtlabTest):
  def test_fibonacci(self):
    self.assertEqual([fibonacci(l) for l in range(1, 8)], [1, 2, 3, 5, 8, 13, 21])
    with self.assertRaises(ValueError): fibonacci(0)

  def test_constants(self):
    for g in ("p", "p/2", "p/10"):
      C = load_constants(g)
      self.assertEqual(C.gamma, g)
      self.assertEqual(C.transitions[7], [7, 8])
      self.assertEqual(len(C.hamming), 16)
    C = load_constants("p")
    self.assertAlmostEqual(C.c4_steane[0], 0.77*39.6)
    self.assertEqual(C.a(5, 6), 2224e6)
    with self.assertRaises(KeyError): C.a(3, 8)
    with self.assertRaises(KeyError): load_constants("p/3")
    with self.assertRaises(KeyError): load_constants("reference")
    self.assertEqual(FitConstants.from_dict("p", C.to_dict()), C)
    with self.assertRaises(ValueError): C.replace(c4c6 = (0.77, -1.0))

  def test_curves(self):
    C = load_constants("p")
    self.assertAlmostEqual(float(c4c6_curve(1, 1e-3, C)), 0.77*0.0396)
    self.assertRelative(float(c4c6_curve(5, 1e-3, C)), 0.77*0.0396**8, 1e-12)
    self.assertRelative(float(surface_curve(3, 1e-3, C)), 0.4998*0.3373**2, 1e-12)
    with self.assertRaises(ValueError): surface_curve(4, 1e-3, C)
    self.assertRelative(float(steane_curve(2, 1e-4, C)), 3.78e10*1e-16, 1e-12)
    self.assertRelative(float(steane_curve(3, 1e-4, C)), 7513*(3.78e10*1e-16)**2, 1e-12)
    self.assertRelative(float(steane_curve(4, 1e-5, C)), 3.78e10*(3.78e10*1e-20)**4, 1e-12)
    self.assertEqual(float(steane_curve(0, 1e-4, C)), 1e-4)
    self.assertRelative(float(c4_steane_curve(2, 1e-3, C)), 10.5e4*1e-9, 1e-12)
    self.assertRelative(float(c4_steane_curve(3, 1e-3, C)), 7513*(10.5e4*1e-9)**2, 1e-12)
    self.assertRelative(float(hamming_curve(5, 6, 1e-3, C)), 2224.0, 1e-12)
    self.assertEqual(c4c6_curve(2, np.array(P), C).shape, (4,))

  def test_fixed_exponent(self):
    a, s = fit_fixed_exponent([(p, 3*p**2) for p in P], 2)
    self.assertRelative(a, 3, 1e-8)
    a, s = fit_fixed_exponent([(p, 5*p**3, 0.1) for p in P], 3)
    self.assertRelative(a, 5, 1e-8)
    self.assertGreater(s, 0)
    # A single point fixes the coefficient.
    self.assertRelative(fit_fixed_exponent([(1e-3, 2e-6)], 2)[0], 2, 1e-8)
    with self.assertRaises(ValueError): fit_fixed_exponent([], 2)
    with self.assertRaises(ValueError): fit_fixed_exponent([(1e-3, 0.0)], 2)
    with self.assertRaises(ValueError): fit_fixed_exponent([(1e-3, 1e-6, math.nan)], 2)

  def test_power_law(self):
    a, k, cov = fit_power_law([(p, 2*p**3) for p in P])
    self.assertRelative(a, 2, 1e-6)
    self.assertAlmostEqual(k, 3, places = 6)
    self.assertEqual(cov.shape, (2, 2))
    with self.assertRaises(ValueError): fit_power_law([(1e-3, 1e-6), (1e-3, 2e-6)])

  def test_c4c6(self):
    C = load_constants("p")
    pts = {l: [(p, float(c4c6_curve(l, p, C)), 0.05) for p in P] for l in (1, 2, 3)}
    A, B, cov = fit_c4c6(pts)
    self.assertRelative(A, 0.77, 1e-6)
    self.assertRelative(B, 39.6, 1e-6)
    L = fit_c4c6_levels(pts)
    self.assertRelative(L[3][0], 0.77*39.6**3, 1e-6)
    with self.assertRaises(ValueError): fit_c4c6({1: pts[1]})
    with self.assertRaises(ValueError): fit_c4c6({1: pts[1], 2: []})

  def test_critical(self):
    truth = (3.0e-3, 1.4, 0.35, 70.0, 3000.0)
    pts = [(d, p, float(critical_curve(d, p, *truth))) for d in (5, 9, 13, 17) for p in np.linspace(2.8e-3, 3.2e-3, 5)]
    F = fit_critical_exponent(pts)
    self.assertRelative(F.p_th, 3.0e-3, 1e-3)
    self.assertRelative(F.mu, 1.4, 1e-2)
    self.assertRelative(F.C, 0.35, 1e-3)
    self.assertEqual(len(tuple(F)), 5)
    with self.assertRaises(ValueError): fit_critical_exponent(pts[:4])
    with self.assertRaises(ValueError): fit_critical_exponent([(d, p, y) for d, p, y in pts if d < 9])

  def test_thresholds(self):
    T = thresholds(load_constants("p"))
    self.assertRelative(T["c4c6"], 1/39.6, 1e-12)
    self.assertRelative(T["steane"], 3.0e-4, 0.01)
    self.assertRelative(T["c4steane"], 1.4e-3, 0.02)
    self.assertEqual(T["surface"], 3.148e-3)
    for g in ("p", "p/2", "p/10"):
      T, R = thresholds(load_constants(g)), reference()["threshold"][g]
      for k in R: self.assertRelative(T[k], R[k], 0.06)

if __name__ == "__main__":
  unittest.main()
