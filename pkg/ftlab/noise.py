import dataclasses, itertools, logging

import numpy as np

from .engine import Kind, PauliOperator, CircuitLocation

log = logging.getLogger(__name__)

GAMMA_RULES = {"p": 1.0, "p/2": 0.5, "p/10": 0.1}

@dataclasses.dataclass(frozen = True)
class NoiseParams:
  "Circuit-level depolarizing noise: `p` on every preparation, gate and measurement; `gamma` on idles."
  p: float
  gamma: float

  def __post_init__(self):
    if not (0 <= self.p <= 1): raise ValueError(f"Physical error rate p must be in [0, 1], got {self.p}!")
    if not (0 <= self.gamma <= 1): raise ValueError(f"Idle error rate gamma must be in [0, 1], got {self.gamma}!")

  @classmethod
  def preset(cls, p: float, rule = "p") -> "NoiseParams":
    """
    Builds noise parameters from a γ rule: one of `p`, `p/2`, `p/10` or a plain number giving γ
    directly.
    """
    if isinstance(rule, str):
      if rule not in GAMMA_RULES:
        try: return cls(p, float(rule))
        except ValueError: raise KeyError(f"Unknown gamma rule {rule}!")
      return cls(p, GAMMA_RULES[rule]*p)
    return cls(p, float(rule))

  def scaled(self, f: float) -> "NoiseParams": return NoiseParams(self.p*f, self.gamma*f)

  @property
  def silent(self) -> bool: return self.p == 0 and self.gamma == 0

TWO_QUBIT_PAULIS = [a + b for a, b in itertools.product("IXYZ", repeat = 2)][1:]

def channel_for(kind: Kind, params: NoiseParams) -> list:
  """
  Returns the fault distribution of a location as a list of (Pauli, probability) pairs. The
  remaining probability mass is the no-fault event. Entries with zero probability are omitted.
  """
  p, g = params.p, params.gamma
  if kind is Kind.PREP_0 or kind is Kind.MEASURE_Z: L = [("X", p)]
  elif kind is Kind.PREP_PLUS or kind is Kind.MEASURE_X: L = [("Z", p)]
  elif kind is Kind.I: L = [(a, g/3) for a in "XYZ"]
  elif kind is Kind.CNOT: L = [(a, p/15) for a in TWO_QUBIT_PAULIS]
  else: L = [(a, p/3) for a in "XYZ"]
  return [(PauliOperator(a), q) for a, q in L if q > 0]

# Letter codes used by the vectorized samplers: 0 = I, 1 = X, 2 = Y, 3 = Z.
LETTER_X = np.array([0, 1, 1, 0], dtype = bool)
LETTER_Z = np.array([0, 0, 1, 1], dtype = bool)

def _letters(kind: Kind, params: NoiseParams, u: np.ndarray) -> np.ndarray:
  "Maps uniform draws `u` to letter codes (shape `u.shape + (arity,)`)."
  p, g = params.p, params.gamma
  if kind is Kind.PREP_0 or kind is Kind.MEASURE_Z: return np.where(u < p, 1, 0)[..., None]
  if kind is Kind.PREP_PLUS or kind is Kind.MEASURE_X: return np.where(u < p, 3, 0)[..., None]
  if kind is Kind.CNOT:
    i = np.where(u < p, np.minimum((u/(p/15)).astype(np.int64), 14) + 1, 0) if p > 0 \
        else np.zeros(u.shape, dtype = np.int64)
    return np.stack((i // 4, i % 4), axis = -1)
  q = g if kind is Kind.I else p
  if q <= 0: return np.zeros(u.shape + (1,), dtype = np.int64)
  return np.where(u < q, np.minimum((u/(q/3)).astype(np.int64), 2) + 1, 0)[..., None]

def sample_pauli_flips(kind: Kind, count: int, shots: int, params: NoiseParams,
                       rng: np.random.Generator) -> tuple:
  """
  Vectorized fault sampling for `count` locations of the same kind over `shots` shots. Returns X
  and Z flip masks of shape (arity, count, shots), distributed exactly as `channel_for`.
  """
  u = rng.random((count, shots))
  L = np.moveaxis(_letters(kind, params, u), -1, 0)
  return LETTER_X[L], LETTER_Z[L]

def sample_faults(circuit, params: NoiseParams, seed: int = 0) -> dict:
  """
  Samples one fault configuration for a flat location list. Returns a map from fault site id to
  the Pauli acting on that location's targets; locations without a fault are absent.
  """
  if params.silent: return {}
  rng = np.random.default_rng(seed)
  F = {}
  for loc in circuit:
    u = rng.random()
    if loc.classical_control is not None: continue
    L = _letters(loc.kind, params, np.asarray(u))
    if not L.any(): continue
    F[loc.fault_site_id] = PauliOperator("".join("IXYZ"[int(l)] for l in L))
  return F

def annotate(params: NoiseParams):
  "Noise annotation for `engine.to_stim`, mirroring `channel_for` with stim's error channels."
  def f(loc: CircuitLocation) -> list:
    k, T = loc.kind, list(loc.targets)
    if loc.classical_control is not None: return []
    if k is Kind.PREP_0 or k is Kind.MEASURE_Z: return [("X_ERROR", params.p, T)] if params.p > 0 else []
    if k is Kind.PREP_PLUS or k is Kind.MEASURE_X: return [("Z_ERROR", params.p, T)] if params.p > 0 else []
    if k is Kind.CNOT: return [("DEPOLARIZE2", params.p, T)] if params.p > 0 else []
    q = params.gamma if k is Kind.I else params.p
    return [("DEPOLARIZE1", q, T)] if q > 0 else []
  return f
