import numpy as np
import math, unittest

def binomial_tolerance(n: int, p: float, z: float = 4.0) -> float:
  "Half-width of a z-sigma band around the mean count of n Bernoulli(p) trials."
  return z*math.sqrt(n*p*(1-p)) + 1

class FtlabTest(unittest.TestCase):
  def assertApproxEqual(self, X: list, Y: list, Z: list = None, **kwargs):
    if isinstance(X, np.ndarray) and isinstance(Y, np.ndarray):
      return self.assertTrue(np.all(v := np.isclose(X, Y, **kwargs)), msg=f"{X} {Y} {v}")
    self.assertEqual(len(X), len(Y))
    if Z is not None: self.assertEqual(len(Y), len(Z))
    for x, y in zip(X, Y): self.assertAlmostEqual(x, y, **kwargs)
    if Z is not None:
      for y, z in zip(Y, Z): self.assertAlmostEqual(y, z, **kwargs)

  def assertRelative(self, x: float, y: float, rtol: float):
    "Asserts |x − y| ≤ rtol·|y|."
    self.assertLessEqual(abs(x - y), rtol*abs(y), msg=f"{x} vs {y} (rtol {rtol})")
