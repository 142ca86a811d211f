"""
Scaling curves of logical error rates, their fits to Monte Carlo data, and thresholds.

All fits run in log₁₀ space, weighted by 1/σ² with σ the standard deviation of log₁₀ p_L.
"""
import dataclasses, functools, json, logging, math, pathlib

import numpy as np
from scipy.optimize import curve_fit, least_squares

log = logging.getLogger(__name__)

CONSTANTS_PATH = pathlib.Path(__file__).resolve().parent.joinpath("constants.json")
GAMMAS = ("p", "p/2", "p/10")

def fibonacci(l: int) -> int:
  "F₁ = 1, F₂ = 2, F_l = F_{l−1} + F_{l−2}."
  if l < 1: raise ValueError(f"Fibonacci index must be at least 1, got {l}!")
  a, b = 1, 2
  for _ in range(l - 1): a, b = b, a + b
  return a

@dataclasses.dataclass(frozen = True)
class FitConstants:
  """
  Fitting constants of one idle-noise model. `hamming[(r, r2)]` is the coefficient of
  P = a·p² for Q_r protocols built to be concatenated with Q_{r2}; `c4c6` and `surface` are
  (A, B); `steane` and `c4_steane` are the level-1 and level-2 coefficients; `critical` is
  (p_th, μ, C, D, E) of the surface-code critical-exponent fit.
  """
  gamma: str
  hamming: dict
  c4c6: tuple
  surface: tuple
  steane: tuple
  c4_steane: tuple
  critical: tuple

  def __post_init__(self):
    if self.c4_steane[0] is None:
      object.__setattr__(self, "c4_steane", (self.c4c6[0]*self.c4c6[1], self.c4_steane[1]))
    for name in ("c4c6", "surface", "steane", "c4_steane"):
      if any(v <= 0 for v in getattr(self, name)): raise ValueError(f"Constants {name} must be positive!")
    if any(v <= 0 for v in self.hamming.values()): raise ValueError("Hamming constants must be positive!")

  def a(self, r: int, r2: int) -> float:
    try: return self.hamming[(r, r2)]
    except KeyError: raise KeyError(f"No Hamming constant a_{r}^({r2}) for gamma={self.gamma}!")

  @property
  def transitions(self) -> dict:
    "Available next codes r2 for every r."
    T = {}
    for r, r2 in sorted(self.hamming): T.setdefault(r, []).append(r2)
    return T

  @classmethod
  def from_dict(cls, gamma: str, D: dict) -> "FitConstants":
    H = {(int(r), int(s)): float(v) for r, R in D["hamming"].items() for s, v in R.items()}
    return cls(gamma, H, tuple(D["c4c6"]), tuple(D["surface"]), tuple(D["steane"]), tuple(D["c4_steane"]),
               tuple(D["critical"]))

  def to_dict(self) -> dict:
    H = {}
    for (r, s), v in sorted(self.hamming.items()): H.setdefault(str(r), {})[str(s)] = v
    return {"hamming": H, "c4c6": list(self.c4c6), "surface": list(self.surface), "steane": list(self.steane),
            "c4_steane": list(self.c4_steane), "critical": list(self.critical)}

  def replace(self, **kwargs) -> "FitConstants": return dataclasses.replace(self, **kwargs)

@functools.cache
def _bundled(path: str = None) -> dict:
  with open(CONSTANTS_PATH if path is None else path, "r") as f: return json.load(f)

def load_constants(gamma: str = "p", path: str = None) -> FitConstants:
  "Bundled constants of the idle-noise model γ ∈ {p, p/2, p/10}, or those of a fit output file."
  D = _bundled(None if path is None else str(path))
  if gamma not in D or gamma == "reference":
    raise KeyError(f"No constants for gamma={gamma}; available: {', '.join(k for k in D if k != 'reference')}!")
  return FitConstants.from_dict(gamma, D[gamma])

def reference() -> dict:
  "Published overhead and threshold cells bundled with the constants."
  return _bundled()["reference"]

def c4c6_curve(l: int, p, C: FitConstants):
  A, B = C.c4c6
  return A*(B*np.asarray(p, dtype = np.float64))**fibonacci(l)

def surface_curve(d: int, p, C: FitConstants):
  if d < 1 or d % 2 == 0: raise ValueError(f"Surface code distance must be odd and positive, got {d}!")
  A, B = C.surface
  return A*(B*np.asarray(p, dtype = np.float64))**((d + 1)//2)

def steane_curve(l: int, p, C: FitConstants):
  "Level-l Steane curve: fitted for l ≤ 2, then P¹∘P⁽ˡ⁻¹⁾ for odd l and P²∘P⁽ˡ⁻²⁾ for even l."
  x = np.asarray(p, dtype = np.float64)
  if l < 0: raise ValueError(f"Level must be nonnegative, got {l}!")
  if l == 0: return x
  a1, a2 = C.steane
  if l == 1: return a1*x**2
  if l == 2: return a2*x**4
  return steane_curve(1, steane_curve(l - 1, x, C), C) if l % 2 == 1 else steane_curve(2, steane_curve(l - 2, x, C), C)

def c4_steane_curve(l: int, p, C: FitConstants):
  "Level-l C₄/Steane curve: a₁p, a₂p³, then the level-(l−2) Steane curve of the level-2 rate."
  x = np.asarray(p, dtype = np.float64)
  a1, a2 = C.c4_steane
  if l < 1: raise ValueError(f"Level must be positive, got {l}!")
  if l == 1: return a1*x
  if l == 2: return a2*x**3
  return steane_curve(l - 2, a2*x**3, C)

def hamming_curve(r: int, r2: int, p, C: FitConstants): return C.a(r, r2)*np.asarray(p, dtype = np.float64)**2

def _points(points) -> tuple:
  P = np.asarray([tuple(x) for x in points], dtype = np.float64)
  if P.ndim != 2 or P.shape[0] == 0: raise ValueError("At least one data point is needed!")
  p, y = P[:, 0], P[:, 1]
  s = P[:, 2] if P.shape[1] > 2 else np.ones(len(P))
  if (p <= 0).any() or (y <= 0).any(): raise ValueError("Fits need positive error rates!")
  if not np.isfinite(s).all() or (s <= 0).any(): raise ValueError("Degenerate σ: every point needs a finite positive σ_log10!")
  return p, y, s

def fit_fixed_exponent(points, exponent: float) -> tuple:
  """
  Fits p_L = a·p^exponent to points (p, p_L[, σ_log10]). Returns (a, σ_a). Without σ the points
  are weighted equally (σ = 1 in log₁₀ units).
  """
  p, y, s = _points(points)
  X, Y = np.log10(p), np.log10(y)
  w = 1/s**2
  la0 = float(np.sum(w*(Y - exponent*X))/np.sum(w))
  (la,), cov = curve_fit(lambda x, la: la + exponent*x, X, Y, p0 = (la0,), sigma = s, absolute_sigma = True)
  a = 10**la
  return float(a), float(a*math.log(10)*math.sqrt(cov[0, 0]))

def fit_power_law(points) -> tuple:
  """
  Fits p_L = a·p^k with a free exponent k to points (p, p_L[, σ_log10]). Returns (a, k, covariance
  of (log₁₀a, k)).
  """
  p, y, s = _points(points)
  if len(np.unique(p)) < 2: raise ValueError("A free exponent needs points at two error rates or more!")
  X, Y = np.log10(p), np.log10(y)
  (la, k), cov = curve_fit(lambda x, la, k: la + k*x, X, Y, p0 = (0.0, 1.0), sigma = s, absolute_sigma = True)
  return float(10**la), float(k), cov

def fit_c4c6(points: dict) -> tuple:
  """
  Joint fit of P_l = A(Bp)^{F_l} over levels. `points` maps each level l to its (p, p_L[, σ])
  points. Returns (A, B, covariance of (log₁₀A, log₁₀B)).
  """
  L = sorted(l for l in points if len(points[l]) > 0)
  if len(L) < 2: raise ValueError(f"The C4/C6 fit needs data for at least two levels, got {len(L)}!")
  F, X, Y, S = [], [], [], []
  for l in L:
    p, y, s = _points(points[l])
    F += [fibonacci(l)]*len(p); X += list(np.log10(p)); Y += list(np.log10(y)); S += list(s)
  F, X, Y, S = map(np.asarray, (F, X, Y, S))
  M = np.stack((np.ones_like(F, dtype = np.float64), F.astype(np.float64)), axis = 1)
  (la0, lb0), *_ = np.linalg.lstsq(M/S[:, None], (Y - F*X)/S, rcond = None)
  (la, lb), cov = curve_fit(lambda Z, la, lb: la + Z[0]*(lb + Z[1]), np.stack((F, X)), Y, p0 = (la0, lb0),
                            sigma = S, absolute_sigma = True)
  A, B = 10**la, 10**lb
  log.info(f"C4/C6 fit over levels {L}: A={A:.4g}, B={B:.4g}.")
  return float(A), float(B), cov

def fit_c4c6_levels(points: dict) -> dict:
  "Per-level diagnostics: the coefficient c_l of P_l = c_l·p^{F_l} for every level."
  return {l: fit_fixed_exponent(points[l], fibonacci(l)) for l in sorted(points) if len(points[l]) > 0}

@dataclasses.dataclass(frozen = True)
class CriticalFit:
  p_th: float
  mu: float
  C: float
  D: float
  E: float
  cost: float = 0.0

  def __iter__(self): return iter((self.p_th, self.mu, self.C, self.D, self.E))

def critical_curve(d, p, p_th: float, mu: float, C: float, D: float, E: float):
  "P′ = C + Dx + Ex² with x = (p − p_th)·d^{1/μ}."
  x = (np.asarray(p, dtype = np.float64) - p_th)*np.asarray(d, dtype = np.float64)**(1/mu)
  return C + D*x + E*x**2

def fit_critical_exponent(points, p0: tuple = None) -> CriticalFit:
  """
  Critical-exponent fit to points (d, p, p_L[, σ]) taken near threshold. `p0` is the starting
  guess (p_th, μ, C, D, E); by default the bundled γ=p surface values.
  """
  P = np.asarray([tuple(x) for x in points], dtype = np.float64)
  if P.ndim != 2 or P.shape[0] < 5: raise ValueError("The critical-exponent fit needs at least five points!")
  d, p, y = P[:, 0], P[:, 1], P[:, 2]
  s = P[:, 3] if P.shape[1] > 3 else np.ones(len(P))
  if len(np.unique(d)) < 3: raise ValueError("The critical-exponent fit needs at least three distances!")
  x0 = np.asarray(load_constants("p").critical if p0 is None else p0, dtype = np.float64)
  res = least_squares(lambda v: (critical_curve(d, p, *v) - y)/s, x0, x_scale = np.maximum(np.abs(x0), 1e-8),
                      xtol = 1e-15, ftol = 1e-15, gtol = 1e-15, max_nfev = 20000)
  if not res.success: raise ValueError(f"The critical-exponent fit did not converge: {res.message}!")
  F = CriticalFit(*map(float, res.x), cost = float(res.cost))
  log.info(f"Critical-exponent fit: p_th={F.p_th:.4e}, mu={F.mu:.4g}, cost={F.cost:.3g}.")
  return F

def thresholds(C: FitConstants) -> dict:
  """
  Thresholds of the underlying codes: 1/B for C₄/C₆, [a⁽²⁾]^(−1/3) for Steane,
  [a_Steane⁽²⁾]^(−1/9)·[a_C₄/Steane⁽²⁾]^(−1/3) for C₄/Steane and the critical-fit p_th for the
  surface code.
  """
  return {"c4c6": 1/C.c4c6[1], "surface": C.critical[0], "steane": C.steane[1]**(-1/3),
          "c4steane": C.steane[1]**(-1/9)*C.c4_steane[1]**(-1/3)}
