"""
Space overhead planning for an underlying code concatenated with a sequence of quantum Hamming
codes Q_{r₁}, …, Q_{r_L}.
"""
import dataclasses, functools, itertools, logging, math

import pandas as pd

from .codes import hamming_code
from .fit import FitConstants, load_constants, c4c6_curve, surface_curve, steane_curve, c4_steane_curve

log = logging.getLogger(__name__)

UNDERLYING = ("c4c6", "surface", "steane", "c4steane")
VALIDITY = 1e-3

class InfeasibleError(ValueError):
  "The target logical error rate cannot be reached within the search bounds."

@dataclasses.dataclass(frozen = True)
class ConcatChain:
  """
  An underlying code (`c4c6`, `steane` or `c4steane` at level `param`, or the `surface` code of
  distance `param`) with Hamming codes Q_r for r in `hamming`, bottom first.
  """
  underlying: str
  param: int
  hamming: tuple = ()

  def __post_init__(self):
    if self.underlying not in UNDERLYING: raise KeyError(f"Unknown underlying code {self.underlying}!")
    if self.underlying == "surface":
      if self.param < 3 or self.param % 2 == 0: raise ValueError(f"Surface distance must be odd and at least 3, got {self.param}!")
    elif self.param < 1: raise ValueError(f"Underlying level must be positive, got {self.param}!")
    object.__setattr__(self, "hamming", tuple(int(r) for r in self.hamming))
    for r in self.hamming:
      if not (3 <= r <= 7): raise ValueError(f"Hamming stages must have r in 3..7, got {r}!")
    if any(a > b for a, b in zip(self.hamming, self.hamming[1:])):
      raise ValueError(f"Hamming parameters must be nondecreasing, got {self.hamming}!")

  def underlying_levels(self) -> list:
    "(label, N, K) of every level of the underlying code."
    u, m = self.underlying, self.param
    if u == "surface": return [(f"surface d={m}", m*m, 1)]
    if u == "c4c6": return [("C4" if l == 1 else "C6", 4*3**(l - 1), 2) for l in range(1, m + 1)]
    if u == "steane": return [("Steane", 7**l, 1) for l in range(1, m + 1)]
    return [("C4" if l == 1 else "Steane", 4*7**(l - 1), 2) for l in range(1, m + 1)]

  def underlying_nk(self) -> tuple: return self.underlying_levels()[-1][1:]

  def levels(self) -> list:
    "(label, N, K) after every level, underlying levels first."
    L = self.underlying_levels()
    N, K = L[-1][1:]
    for r in self.hamming:
      Q = hamming_code(r)
      N, K = N*Q.n, K*Q.k
      L.append((f"Q{r}", N, K))
    return L

  @property
  def N(self) -> int: return self.levels()[-1][1]
  @property
  def K(self) -> int: return self.levels()[-1][2]
  @property
  def overhead(self) -> float: return self.N/self.K

  def next_codes(self) -> list:
    "Code each Hamming stage is built for: the next stage's r, or r+1 on top."
    H = self.hamming
    return [H[i + 1] if i + 1 < len(H) else H[i] + 1 for i in range(len(H))]

  def __str__(self) -> str:
    u = f"{self.underlying}({self.param})"
    return "+".join([u] + [f"Q{r}" for r in self.hamming])

def table1_chain() -> ConcatChain:
  "Level-5 C₄/C₆ followed by Q₅, Q₆, Q₇, Q₇."
  return ConcatChain("c4c6", 5, (5, 6, 7, 7))

@dataclasses.dataclass(frozen = True)
class TargetSpec:
  target: float
  p: float
  gamma: str = "p"

  def __post_init__(self):
    if not (0 < self.target < 1): raise ValueError(f"Target logical error rate must be in (0, 1), got {self.target}!")
    if not (0 <= self.p <= 1): raise ValueError(f"Physical error rate must be in [0, 1], got {self.p}!")

def underlying_error(chain: ConcatChain, p: float, C: FitConstants) -> float:
  u, m = chain.underlying, chain.param
  if u == "c4c6": v = c4c6_curve(m, p, C)
  elif u == "surface": v = surface_curve(m, p, C)
  elif u == "steane": v = steane_curve(m, p, C)
  else: v = c4_steane_curve(m, p, C)
  return min(float(v), 1.0)

def compose_trace(chain: ConcatChain, p: float, C: FitConstants, warn: bool = True) -> list:
  """
  Logical error rate after the underlying code and after every Hamming stage. Stage rates are
  a·x² with a the constant of (r, next code), capped at 1.
  """
  x = underlying_error(chain, p, C)
  T = [x]
  for i, (r, r2) in enumerate(zip(chain.hamming, chain.next_codes())):
    if warn and x > VALIDITY:
      log.warning(f"Input {x:.3g} of stage Q{r} in {chain} is above the fit validity range ({VALIDITY:g}).")
    x = min(C.a(r, r2)*x*x, 1.0)
    T.append(x)
  return T

def compose_error(chain: ConcatChain, p: float, C: FitConstants = None, warn: bool = True) -> float:
  "Overall logical error rate P_{r_L}^{(r_L+1)} ∘ … ∘ P_{r_1}^{(r_2)} ∘ P₀(p)."
  return compose_trace(chain, p, load_constants("p") if C is None else C, warn)[-1]

def space_overhead(chain: ConcatChain) -> pd.DataFrame:
  "N, K and N/K after every level of a chain."
  return pd.DataFrame([{"level": i, "code": c, "N": N, "K": K, "overhead": N/K}
                       for i, (c, N, K) in enumerate(chain.levels(), start = 1)])

def compose_table(chain: ConcatChain, p: float, C: FitConstants = None) -> pd.DataFrame:
  """
  Per-level table of a chain: N, K, N/K and the logical error rate after the level. Underlying
  levels use the underlying curve at that level; Hamming levels use the chain's composition.
  """
  C = load_constants("p") if C is None else C
  T = compose_trace(chain, p, C)
  n = chain.param if chain.underlying != "surface" else 1
  rows = []
  for i, (c, N, K) in enumerate(chain.levels(), start = 1):
    if i <= n:
      e = T[0] if chain.underlying == "surface" else underlying_error(ConcatChain(chain.underlying, i), p, C)
    else: e = T[i - n]
    rows.append({"level": i, "code": c, "N": N, "K": K, "overhead": N/K, "p_L": e})
  return pd.DataFrame(rows)

@dataclasses.dataclass(frozen = True)
class SearchBounds:
  "L′ ≤ `max_level` underlying levels, at most `max_hamming` Hamming stages with r in `r_values`."
  max_level: int = 8
  max_hamming: int = 10
  r_values: tuple = (3, 4, 5, 6, 7)
  max_distance: int = 401

def _underlyings(u: str, B: SearchBounds):
  if u == "surface": return (ConcatChain(u, d) for d in range(3, B.max_distance + 1, 2))
  return (ConcatChain(u, l) for l in range(1, B.max_level + 1))

@functools.cache
def _sequences(max_hamming: int, r_values: tuple) -> list:
  "Nondecreasing Hamming sequences with their N and K factors, sorted by overhead factor."
  S = [()]
  for L in range(1, max_hamming + 1): S += list(itertools.combinations_with_replacement(r_values, L))
  F = [(H, math.prod(hamming_code(r).n for r in H), math.prod(hamming_code(r).k for r in H)) for H in S]
  return sorted(F, key = lambda f: f[1]/f[2])

def _stages(x: float, H: tuple, C: FitConstants) -> float:
  for i, r in enumerate(H): x = min(C.a(r, H[i + 1] if i + 1 < len(H) else r + 1)*x*x, 1.0)
  return x

def optimize_chain(spec: TargetSpec, underlying: str = "c4c6", C: FitConstants = None,
                   bounds: SearchBounds = SearchBounds()) -> ConcatChain:
  """
  Chain of minimum N/K over the search bounds whose composed logical error rate is at most the
  target; ties go to the smaller N. Raises `InfeasibleError` when no chain qualifies.
  """
  C = load_constants(spec.gamma) if C is None else C
  best, key = None, (math.inf, math.inf)
  for U in _underlyings(underlying, bounds):
    N0, K0 = U.underlying_nk()
    # Underlying overheads grow with the level or distance.
    if (N0/K0, N0) >= key: break
    x0 = underlying_error(U, spec.p, C)
    if x0 >= 1: continue
    for H, n, k in _sequences(bounds.max_hamming, bounds.r_values):
      K = (N0*n/(K0*k), N0*n)
      if K >= key:
        if K[0] > key[0]: break
        continue
      if _stages(x0, H, C) <= spec.target: best, key = ConcatChain(U.underlying, U.param, H), K
  if best is None:
    raise InfeasibleError(f"No {underlying} chain reaches {spec.target:g} at p={spec.p:g} (gamma={spec.gamma})!")
  log.info(f"Best {underlying} chain at p={spec.p:g}: {best} with overhead {best.overhead:.4g}.")
  return best


def surface_overhead_for_target(p: float, target: float, C: FitConstants = None, max_distance: int = 10001) -> tuple:
  """
  Smallest odd distance d ≥ 3 with A(Bp)^((d+1)/2) ≤ target and its overhead d² (data qubits
  per logical qubit).
  """
  C = load_constants("p") if C is None else C
  if not (0 < target < 1): raise ValueError(f"Target logical error rate must be in (0, 1), got {target}!")
  if p == 0: return 3, 9
  A, B = C.surface
  if B*p >= 1: raise InfeasibleError(f"The surface code cannot suppress errors at p={p:g}!")
  k = max(2, math.ceil(math.log(target/A)/math.log(B*p) - 1e-12))
  d = 2*k - 1
  while surface_curve(d, p, C) > target: d += 2
  if d > max_distance: raise InfeasibleError(f"Surface distance {d} exceeds the bound {max_distance}!")
  return d, d*d

def overhead_table(ps, target: float = 1e-24, gamma: str = "p", underlyings = UNDERLYING,
                   bounds: SearchBounds = SearchBounds()) -> pd.DataFrame:
  "Optimized overheads for every (underlying, p); infeasible cells have no chain."
  C = load_constants(gamma)
  rows = []
  for u in underlyings:
    for p in ps:
      R = {"p": p, "gamma": gamma, "target": target, "underlying": u}
      try:
        ch = optimize_chain(TargetSpec(target, p, gamma), u, C, bounds)
        R |= {"chain": str(ch), "N": ch.N, "K": ch.K, "overhead": ch.overhead, "p_L": compose_error(ch, p, C, False)}
      except InfeasibleError:
        R |= {"chain": "-", "N": None, "K": None, "overhead": None, "p_L": None}
      rows.append(R)
  return pd.DataFrame(rows)

def rsa_toffoli_count(n_bits: int) -> float:
  if n_bits < 1: raise ValueError(f"Bit count must be positive, got {n_bits}!")
  return 0.3*n_bits**3 + 0.0005*n_bits**3*math.log2(n_bits)

def rsa_cnot_count(n_bits: int) -> float:
  "CNOTs of n-bit RSA factoring, six per Toffoli: 1.8n³ + 0.003n³ lg n."
  if n_bits < 1: raise ValueError(f"Bit count must be positive, got {n_bits}!")
  return 1.8*n_bits**3 + 0.003*n_bits**3*math.log2(n_bits)

def classical_error_budget(ops_per_second: float, seconds: float) -> float:
  "Inverse of the number of elementary operations of a classical computation."
  if ops_per_second <= 0 or seconds <= 0: raise ValueError("Operation rate and duration must be positive!")
  return 1/(ops_per_second*seconds)
