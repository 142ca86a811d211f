import enum, dataclasses, functools, logging

import numpy as np

from .engine import PauliOperator
from .codes import CssCode, Tower, steane_code

log = logging.getLogger(__name__)

E = 2

class DecodedOutcome(enum.IntEnum):
  "Decoder output symbol: a bit or the erasure flag E (error detected, not corrected)."
  ZERO = 0
  ONE = 1
  E = E

  def __str__(self) -> str: return "E" if self is DecodedOutcome.E else str(int(self))

def _scalar(f):
  "Lets a vectorized decoder take and return plain tuples of outcomes."
  @functools.wraps(f)
  def g(m, *args, **kwargs):
    if isinstance(m, np.ndarray): return f(m.astype(np.uint8), *args, **kwargs)
    a = np.asarray([int(x) for x in np.ravel(m)], dtype = np.uint8)
    r = f(a, *args, **kwargs)
    if np.ndim(r) == 0: return DecodedOutcome(int(r))
    return tuple(DecodedOutcome(int(x)) for x in r)
  return g

def _basis(basis: str) -> str:
  if basis not in ("X", "Z"): raise ValueError(f"Measurement basis must be X or Z, got {basis}!")
  return basis

def _positions(m: np.ndarray, n: int) -> np.ndarray:
  if m.shape[-1] != n: raise ValueError(f"Expected {n} positions on the last axis, got {m.shape[-1]}!")
  return m

@_scalar
def decode_c4(m: np.ndarray, basis: str = "Z") -> np.ndarray:
  """
  C₄ decoder. With even total parity, Z outcomes give (m₁+m₂, m₂+m₄) and X outcomes give
  (m₁+m₃, m₃+m₄); otherwise the block decodes to (E, E).
  """
  m = _positions(m, 4).astype(np.int64)
  m1, m2, m3, m4 = np.moveaxis(m, -1, 0)
  if _basis(basis) == "Z": o = np.stack(((m1 + m2) % 2, (m2 + m4) % 2), axis = -1)
  else: o = np.stack(((m1 + m3) % 2, (m3 + m4) % 2), axis = -1)
  bad = ((m1 + m2 + m3 + m4) % 2 == 1) | (m == E).any(-1)
  return np.where(bad[..., None], E, o).astype(np.uint8)

# Erasure-free logical readouts of C₆, one row per erased pair (none, 1, 2, 3).
C6_READOUT = {
  "Z": [((2, 3), (1, 3, 4)), ((3, 4, 6), (4, 5)), ((1, 2, 5), (2, 5, 6)), ((2, 3), (1, 3, 4))],
  "X": [((1, 3), (1, 5)), ((3, 4, 5, 6), (4, 6)), ((2, 6), (1, 5)), ((1, 3), (1, 2, 3, 4))],
}
C6_CHECKS = {"Z": ((1, 3, 5), (2, 4, 6)), "X": ((2, 3, 4, 5), (1, 2, 3, 6))}

def _parity(m: np.ndarray, S: tuple) -> np.ndarray: return m[..., [s - 1 for s in S]].sum(-1) % 2

@_scalar
def decode_c6(m: np.ndarray, basis: str = "Z") -> np.ndarray:
  """
  C₆ decoder over three pairs of level-(l−1) outcomes (last axis: m₁..m₆, pair n = (m₂ₙ₋₁, m₂ₙ)).
  Without erasures the two checks must pass; one erased pair is recovered from the other two;
  two or more erased pairs decode to (E, E).
  """
  m = _positions(m.reshape(m.shape[:-2] + (6,)) if m.ndim >= 2 and m.shape[-2:] == (3, 2) else m, 6)
  b = _basis(basis)
  e = (m == E).reshape(m.shape[:-1] + (3, 2)).any(-1)
  v = np.where(m == E, 0, m).astype(np.int64)
  out = np.full(m.shape[:-1] + (2,), E, dtype = np.uint8)
  ne = e.sum(-1)
  ok = (ne == 0) & np.all([_parity(v, S) == 0 for S in C6_CHECKS[b]], axis = 0)
  cases = [ok] + [(ne == 1) & e[..., n] for n in range(3)]
  for c, R in zip(cases, C6_READOUT[b]):
    o = np.stack([_parity(v, S) for S in R], axis = -1)
    out = np.where(c[..., None], o, out)
  return out.astype(np.uint8)

def _steane_fix(m: np.ndarray) -> np.ndarray:
  "Steane decoding of bit arrays; erasures count as 0."
  v = (m % 2).astype(np.int64)
  a = steane_code().syndrome(v, "Z")
  i = a[..., 0] + 2*a[..., 1] + 4*a[..., 2]
  return ((v[..., 0] + v[..., 1] + v[..., 2] + ((i >= 1) & (i <= 3))) % 2).astype(np.uint8)

@_scalar
def decode_steane(m: np.ndarray) -> np.ndarray:
  "Steane decoder: corrects the position i = a₁ + 2a₂ + 4a₃ and reads m₁+m₂+m₃."
  return _steane_fix(_positions(m, 7))

@_scalar
def decode_c4_steane_l2(m: np.ndarray) -> np.ndarray:
  """
  Steane decoding of seven C₄ outcomes. Exactly two erasures are filled by the unique assignment
  satisfying all three Steane checks; in every other case erasures are read as 0 and the plain
  Steane decoder is used.
  """
  m = _positions(m, 7)
  e = m == E
  ne = e.sum(-1)
  order = np.cumsum(e, -1)*e
  v = (m % 2).astype(np.int64)
  S = steane_code()
  res = _steane_fix(m)
  found = np.zeros(m.shape[:-1], dtype = bool)
  for a in (0, 1):
    for b in (0, 1):
      f = np.where(order == 1, a, np.where(order == 2, b, v))
      good = (ne == 2) & ~found & ~S.syndrome(f, "Z").any(-1)
      res = np.where(good, (f[..., 0] + f[..., 1] + f[..., 2]) % 2, res)
      found |= good
  return res.astype(np.uint8)

def decode_hamming(m, code: CssCode, basis: str = "Z"):
  """
  Syndrome decoder of Q_r: the syndrome, read as a binary number, is the position of a single
  flipped bit, whose contribution is removed from every logical readout.
  """
  scalar = not isinstance(m, np.ndarray)
  v = (np.asarray([int(x) for x in m] if scalar else m) % 2).astype(np.int64)
  v = _positions(v, code.n)
  s = code.syndrome(v, _basis(basis))
  i = (s << np.arange(s.shape[-1])).sum(-1)
  L = code.logical(basis).astype(np.int64)
  o = code.values(v, basis)
  fix = np.where((i > 0)[..., None], L.T[np.maximum(i - 1, 0)], 0)
  o = ((o + fix) % 2).astype(np.uint8)
  return tuple(int(x) for x in o) if scalar else o

def decode_level(code: CssCode, v: np.ndarray, basis: str, erasures: bool = False) -> np.ndarray:
  "Decodes one level: `v` holds the code's n positions on its last axis; returns (..., k)."
  if code.name == "C4": return decode_c4(v, basis)
  if code.name == "C6": return decode_c6(v, basis)
  if code.name == "Steane": return (decode_c4_steane_l2(v) if erasures else decode_steane(v))[..., None]
  if code.name.startswith("Q"): return decode_hamming(v, code, basis)
  raise KeyError(f"No decoder for code {code.name}!")

def decode_block(tower: Tower, bits: np.ndarray, basis: str, level: int = None) -> np.ndarray:
  """
  Hierarchically decodes transversal measurement outcomes of level-`level` blocks (last axis:
  the N_l physical qubits in canonical order). Returns (..., K_l) outcomes in {0, 1, E}.
  """
  l = tower.levels if level is None else level
  v = np.asarray(bits, dtype = np.uint8)
  if v.shape[-1] != tower.N(l): raise ValueError(f"Level-{l} block has {tower.N(l)} qubits, got {v.shape[-1]}!")
  lead = v.shape[:-1]
  erasures = False
  for i in range(1, l + 1):
    c, K = tower.codes[i-1], tower.K(i-1)
    n = tower.sub(i)
    if tower.modes[i-1] == "slice":
      v = v.reshape(lead + (-1, n, K))
      v = np.swapaxes(decode_level(c, np.swapaxes(v, -1, -2), basis, erasures), -1, -2)
    else: v = decode_level(c, v.reshape(lead + (-1, n*K)), basis, erasures)
    v = v.reshape(lead + (-1,))
    erasures = erasures or c.name in ("C4", "C6")
  return v.reshape(lead + (tower.K(l),))

@dataclasses.dataclass
class KnillCorrection:
  """
  Byproduct correction of a teleportation: `x[..., k]` (`z[..., k]`) is 1 when logical X̄ₖ (Z̄ₖ)
  must be applied to the output block. `erased` marks outcomes that decoded to E.
  """
  x: np.ndarray
  z: np.ndarray
  erased: np.ndarray

  def pauli(self, code: CssCode):
    "The physical correction on a single block of `code` (scalar corrections only)."
    xs = (self.x.astype(np.int64) @ code.lx.astype(np.int64)) % 2
    zs = (self.z.astype(np.int64) @ code.lz.astype(np.int64)) % 2
    return PauliOperator.from_bits(xs, zs)

def knill_frame_update(x_bits, z_bits, mode: str = "ec", rng: np.random.Generator = None) -> KnillCorrection:
  """
  Teleportation byproduct rule. `x_bits` are the decoded X outcomes of the data block and select
  Z̄ corrections; `z_bits` are the decoded Z outcomes of the Bell half and select X̄ corrections.
  In `ec` mode an E outcome is replaced by a uniformly random bit; in `ed` mode it is reported in
  `erased` and no correction is drawn for it.
  """
  if mode not in ("ec", "ed"): raise ValueError(f"Unknown teleportation mode {mode}!")
  xb, zb = np.asarray(x_bits, dtype = np.uint8), np.asarray(z_bits, dtype = np.uint8)
  if xb.shape != zb.shape: raise ValueError(f"Outcome shapes differ: {xb.shape} vs {zb.shape}!")
  ex, ez = xb == E, zb == E
  erased = ex | ez
  if mode == "ec" and erased.any():
    rng = np.random.default_rng() if rng is None else rng
    xb = np.where(ex, rng.random(xb.shape) < 0.5, xb)
    zb = np.where(ez, rng.random(zb.shape) < 0.5, zb)
  else:
    xb, zb = np.where(ex, 0, xb), np.where(ez, 0, zb)
  return KnillCorrection(zb.astype(np.uint8), xb.astype(np.uint8), erased)
