import dataclasses, functools, logging, pathlib
from collections.abc import Sequence

import numpy as np

from .engine import Kind, PauliOperator, CircuitLocation

log = logging.getLogger(__name__)

def rref(M: np.ndarray) -> tuple[np.ndarray, list]:
  "Reduced row echelon form over GF(2). Returns the reduced matrix and its pivot columns."
  A = np.array(M, dtype = np.uint8) % 2
  if A.ndim == 1: A = A[None, :]
  P, r = [], 0
  for c in range(A.shape[1]):
    if r >= A.shape[0]: break
    nz = np.flatnonzero(A[r:, c])
    if len(nz) == 0: continue
    i = r + nz[0]
    if i != r: A[[r, i]] = A[[i, r]]
    rows = np.flatnonzero(A[:, c])
    rows = rows[rows != r]
    A[rows] ^= A[r]
    P.append(c)
    r += 1
  return A[:r], P

def rank(M: np.ndarray) -> int: return len(rref(M)[1]) if np.size(M) > 0 else 0

def in_span(M: np.ndarray, v: np.ndarray) -> bool:
  "Whether `v` lies in the GF(2) row space of `M`."
  v = np.asarray(v, dtype = np.uint8) % 2
  if not v.any(): return True
  if np.size(M) == 0: return False
  return rank(np.vstack((M, v))) == rank(M)

def nullspace(M: np.ndarray) -> np.ndarray:
  "Basis (as rows) of the GF(2) null space of `M`."
  M = np.asarray(M, dtype = np.uint8)
  n = M.shape[1]
  R, P = rref(M) if np.size(M) > 0 else (np.zeros((0, n), dtype = np.uint8), [])
  free = [c for c in range(n) if c not in P]
  B = np.zeros((len(free), n), dtype = np.uint8)
  for i, f in enumerate(free):
    B[i, f] = 1
    for r, p in enumerate(P): B[i, p] = R[r, f]
  return B

def inverse(M: np.ndarray) -> np.ndarray:
  "Inverse of a square GF(2) matrix."
  k = len(M)
  R, P = rref(np.hstack((np.asarray(M, dtype = np.uint8) % 2, np.eye(k, dtype = np.uint8))))
  if P[:k] != list(range(k)) or len(P) < k: raise ValueError("Matrix is singular over GF(2)!")
  return R[:k, k:]

def _support(P: PauliOperator, letter: str) -> np.ndarray:
  xs, zs = P.bits()
  if letter == "X":
    if zs.any(): raise ValueError(f"{P} is not an X-type operator!")
    return xs.astype(np.uint8)
  if xs.any(): raise ValueError(f"{P} is not a Z-type operator!")
  return zs.astype(np.uint8)

@dataclasses.dataclass(frozen = True, eq = False)
class CssCode:
  """
  A CSS code described by binary matrices: `hx` (`hz`) rows are the supports of the X-type
  (Z-type) stabilizer generators; `lx` (`lz`) rows are logical X (Z) representatives, paired so
  that `lx·lzᵀ = I` over GF(2).
  """
  name: str
  n: int
  k: int
  d: int
  hx: np.ndarray
  hz: np.ndarray
  lx: np.ndarray
  lz: np.ndarray

  def __post_init__(self):
    for f in ("hx", "hz", "lx", "lz"):
      A = np.array(getattr(self, f), dtype = np.uint8).reshape(-1, self.n) % 2
      A.flags.writeable = False
      object.__setattr__(self, f, A)
    self.validate()

  def validate(self):
    "Checks commutation of stabilizers and the pairing of logical operators."
    if (self.hx @ self.hz.T % 2).any(): raise ValueError(f"Stabilizers of {self.name} do not commute!")
    if len(self.lx) != self.k or len(self.lz) != self.k:
      raise ValueError(f"{self.name} must have {self.k} logical pairs!")
    if (self.lx.astype(int) @ self.hz.T % 2).any() or (self.lz.astype(int) @ self.hx.T % 2).any():
      raise ValueError(f"Logical operators of {self.name} do not commute with its stabilizers!")
    if not np.array_equal(self.lx.astype(int) @ self.lz.T % 2, np.eye(self.k, dtype = int)):
      raise ValueError(f"Logical operators of {self.name} are not paired!")

  @property
  def x_stabilizers(self) -> list: return [PauliOperator.from_bits(r, np.zeros(self.n)) for r in self.hx]
  @property
  def z_stabilizers(self) -> list: return [PauliOperator.from_bits(np.zeros(self.n), r) for r in self.hz]
  @property
  def logical_x(self) -> list: return [PauliOperator.from_bits(r, np.zeros(self.n)) for r in self.lx]
  @property
  def logical_z(self) -> list: return [PauliOperator.from_bits(np.zeros(self.n), r) for r in self.lz]

  def logical(self, basis: str) -> np.ndarray: return self.lx if basis == "X" else self.lz
  def checks(self, basis: str) -> np.ndarray:
    "Parity checks seen by a transversal measurement in `basis`: X stabilizers for X, Z for Z."
    return self.hx if basis == "X" else self.hz

  def syndrome(self, bits: np.ndarray, basis: str) -> np.ndarray:
    "Check parities of transversally measured `bits` (last axis: the n positions)."
    return (np.asarray(bits, dtype = np.int64) @ self.checks(basis).T.astype(np.int64)) % 2

  def values(self, bits: np.ndarray, basis: str) -> np.ndarray:
    "Raw logical parities of transversally measured `bits`."
    return (np.asarray(bits, dtype = np.int64) @ self.logical(basis).T.astype(np.int64)) % 2

  def __repr__(self) -> str: return f"{self.name}[[{self.n},{self.k},{self.d}]]"

def derive_logical_operators(hx: np.ndarray, hz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
  """
  Derives paired logical X and Z representatives of the CSS code with stabilizer supports `hx`
  and `hz` by Gaussian elimination over GF(2).
  """
  hx, hz = np.asarray(hx, dtype = np.uint8) % 2, np.asarray(hz, dtype = np.uint8) % 2
  if hx.shape[1] != hz.shape[1]: raise ValueError("Stabilizer matrices act on different qubit counts!")
  if (hx.astype(int) @ hz.T % 2).any(): raise ValueError("Inconsistent stabilizers: X and Z generators anticommute!")
  def pick(C, S):
    B, L = S.copy(), []
    for v in C:
      if rank(np.vstack((B, v))) > rank(B):
        L.append(v)
        B = np.vstack((B, v))
    return np.array(L, dtype = np.uint8).reshape(-1, hx.shape[1])
  lx, lz = pick(nullspace(hz), hx), pick(nullspace(hx), hz)
  if len(lx) != len(lz): raise ValueError("Inconsistent stabilizers: logical counts differ!")
  if len(lx) == 0: return lx, lz
  M = lx.astype(int) @ lz.T % 2
  lz = (inverse(M).T.astype(int) @ lz % 2).astype(np.uint8)
  return lx, lz

def hamming_matrix(r: int) -> np.ndarray:
  "The r×(2ʳ−1) classical Hamming parity-check matrix whose column j is j in binary (row t is bit t)."
  j = np.arange(1, 2**r)
  return ((j[None, :] >> np.arange(r)[:, None]) & 1).astype(np.uint8)

@functools.cache
def hamming_code(r: int) -> CssCode:
  "The quantum Hamming code Q_r = [[2ʳ−1, 2ʳ−1−2r, 3]]."
  if not isinstance(r, (int, np.integer)): raise TypeError(f"Hamming parameter r must be int, got {type(r)}!")
  if not (3 <= r <= 8): raise ValueError(f"Hamming parameter r must be in 3..8, got {r}!")
  H = hamming_matrix(r)
  if r == 3: lx = lz = np.array([[1, 1, 1, 0, 0, 0, 0]], dtype = np.uint8)
  else: lx, lz = derive_logical_operators(H, H)
  return CssCode(f"Q{r}", 2**r - 1, 2**r - 1 - 2*r, 3, H, H, lx, lz)

@functools.cache
def steane_code() -> CssCode:
  "The Steane code, i.e. Q₃, with X̄ = X₁X₂X₃ and Z̄ = Z₁Z₂Z₃."
  Q = hamming_code(3)
  return CssCode("Steane", 7, 1, 3, Q.hx, Q.hz, Q.lx, Q.lz)

def _rows(n: int, S: Sequence) -> np.ndarray:
  A = np.zeros((len(S), n), dtype = np.uint8)
  for i, s in enumerate(S): A[i, [q - 1 for q in s]] = 1
  return A

@functools.cache
def c4_code() -> CssCode:
  """
  The [[4,2,2]] code C₄. Positions 1..4 hold the qubits usually labelled 1, 3, 2, 4, so that
  X̄₁ = X₁X₃, X̄₂ = X₃X₄, Z̄₁ = Z₁Z₂, Z̄₂ = Z₂Z₄.
  """
  return CssCode("C4", 4, 2, 2, _rows(4, [(1, 2, 3, 4)]), _rows(4, [(1, 2, 3, 4)]),
                 _rows(4, [(1, 3), (3, 4)]), _rows(4, [(1, 2), (2, 4)]))

# Position of each C₄ qubit after ∗u; applying it twice gives ∗u².
C4_STAR_U = np.array([0, 3, 1, 2])

@functools.cache
def c6_code() -> CssCode:
  """
  The [[6,2,2]] code C₆ over three registers of two logical level-(l−1) qubits: position
  2(n−1)+j holds qubit j of register n. Codewords are (a, ∗u a, ∗u² a).
  """
  return CssCode("C6", 6, 2, 2, _rows(6, [(2, 3, 4, 5), (1, 2, 3, 6)]), _rows(6, [(1, 3, 5), (2, 4, 6)]),
                 _rows(6, [(1, 3), (1, 5)]), _rows(6, [(2, 3), (1, 3, 4)]))

CODES = {"c4": c4_code, "c6": c6_code, "steane": steane_code}

def code_by_name(name: str) -> CssCode:
  s = name.lower()
  if s in CODES: return CODES[s]()
  if s.startswith("q") and s[1:].isdigit(): return hamming_code(int(s[1:]))
  raise KeyError(f"Unknown code {name}!")

@dataclasses.dataclass(frozen = True)
class RegisterIndex:
  "Level-l interleaving of logical indices: i = K⁽ˡ⁻¹⁾(k−1) + j (all 1-indexed)."
  level: int
  K_prev: int
  k_code: int

  @property
  def K(self) -> int: return self.K_prev*self.k_code

  def index(self, k: int, j: int) -> int:
    if not (1 <= k <= self.k_code and 1 <= j <= self.K_prev):
      raise ValueError(f"Register pair ({k}, {j}) out of range at level {self.level}!")
    return self.K_prev*(k - 1) + j

  def pair(self, i: int) -> tuple[int, int]:
    if not (1 <= i <= self.K): raise ValueError(f"Register index {i} out of range at level {self.level}!")
    return (i - 1)//self.K_prev + 1, (i - 1) % self.K_prev + 1

def chain_register_layout(chain) -> list:
  """
  Per-Hamming-level interleaving maps of a concatenation chain. The chain provides `underlying_nk()`
  (physical and logical qubits of the underlying block) and the sequence `hamming` of r values.
  """
  K = chain.underlying_nk()[1]
  L = []
  for l, r in enumerate(chain.hamming, start = 1):
    R = RegisterIndex(l, K, hamming_code(r).k)
    L.append(R)
    K = R.K
  return L

@dataclasses.dataclass
class LatinRectangle:
  """
  CNOT schedule of a Hamming encoder: `L[i-1, j-1] = ℓ > 0` places a CNOT from qubit 2^(i−1) to
  qubit j in layer ℓ.
  """
  r: int
  L: np.ndarray

  @property
  def n(self) -> int: return self.L.shape[1]
  @property
  def depth(self) -> int: return int(self.L.max())

  def required(self) -> np.ndarray:
    "Mask of (row, column) pairs that must carry a CNOT."
    H = hamming_matrix(self.r).astype(bool)
    H[np.arange(self.r), 2**np.arange(self.r) - 1] = False
    return H

  def validate(self):
    "Raises on entries outside the required pattern or layers used twice by a row or a column."
    if self.L.shape != (self.r, 2**self.r - 1):
      raise ValueError(f"Latin rectangle L{self.r} must be {self.r}×{2**self.r - 1}, got {self.L.shape}!")
    if (self.L < 0).any(): raise ValueError(f"Latin rectangle L{self.r} has negative entries!")
    if ((self.L > 0) & ~self.required()).any():
      raise ValueError(f"Latin rectangle L{self.r} schedules a CNOT outside the Hamming pattern!")
    for A in (self.L, self.L.T):
      for row in A:
        v = row[row > 0]
        if len(np.unique(v)) != len(v): raise ValueError(f"Latin rectangle L{self.r} reuses a layer!")

  def missing(self) -> list: return [tuple(p) for p in np.argwhere(self.required() & (self.L == 0))]

  def completed(self) -> "LatinRectangle":
    """
    Schedules every missing required pair without exceeding the larger of the current depth and the
    largest row or column degree. A pair takes a layer free in both its row and its column; when
    none is, a two-layer alternating chain from its row is swapped first.
    """
    L = self.L.copy()
    D = max(int(L.max()), int(self.required().sum(0).max()), int(self.required().sum(1).max()))
    def free(i, j): return [c for c in range(1, D + 1) if c not in L[i] and (j is None or c not in L[:, j])]
    for i, j in self.missing():
      common = free(i, j)
      if len(common) > 0:
        L[i, j] = common[0]
        continue
      a = free(i, None)[0]
      b = [c for c in range(1, D + 1) if c not in L[:, j]][0]
      # Alternating b/a chain starting at row i; it never reaches column j.
      path, x, row, c = [], i, True, b
      while True:
        hit = np.flatnonzero(L[x] == c) if row else np.flatnonzero(L[:, x] == c)
        if len(hit) == 0: break
        e = (x, int(hit[0])) if row else (int(hit[0]), x)
        path.append(e)
        x, row, c = int(hit[0]), not row, a if c == b else b
      for e in path: L[e] = a if L[e] == b else b
      L[i, j] = b
    return LatinRectangle(self.r, L)

  def layers(self) -> list:
    "CNOT layers as lists of 0-indexed (control, target) pairs."
    return [[(2**i - 1, j) for i, j in np.argwhere(self.L == l)] for l in range(1, self.depth + 1)]

LATIN_PATH = pathlib.Path(__file__).resolve().parent.joinpath("latin.txt")

@functools.cache
def load_latin(path: str = None, complete: bool = True) -> dict:
  """
  Reads Latin rectangles from `path` (default: the bundled `latin.txt`). Each rectangle is a
  header line `r n` followed by r rows of n integers. With `complete`, rectangles missing
  required pairs are completed (see `LatinRectangle.completed`); otherwise they are returned as
  written.
  """
  with open(LATIN_PATH if path is None else path, "r") as f:
    T = [l.split() for l in f if len(l.strip()) > 0 and not l.lstrip().startswith("#")]
  R, i = {}, 0
  while i < len(T):
    if len(T[i]) != 2: raise ValueError(f"Malformed Latin rectangle header: {' '.join(T[i])}!")
    r, n = map(int, T[i])
    rows = T[i+1:i+1+r]
    if len(rows) != r or any(len(x) != n for x in rows):
      raise ValueError(f"Malformed Latin rectangle L{r}: expected {r} rows of {n} entries!")
    L = LatinRectangle(r, np.array(rows, dtype = np.int64))
    L.validate()
    if complete and len(m := L.missing()) > 0:
      C = L.completed()
      C.validate()
      log.info(f"Latin rectangle L{r} lacks {len(m)} required CNOT(s); completed at depth {C.depth} (was {L.depth}).")
      L = C
    R[r] = L
    i += 1 + r
  return R

def latin_moments(r: int, state: str) -> list:
  """
  Encoder of Q_r into |0̄…0̄⟩ (`zero`) or |+̄…+̄⟩ (`plus`) as moments of (Kind, targets) pairs over
  qubits 0..n−1. The plus-state encoder is the dual circuit: preparation bases swapped and CNOTs
  reversed.
  """
  if state not in ("zero", "plus"): raise ValueError(f"Unknown logical state {state}!")
  R = load_latin()
  if r not in R: raise ValueError(f"No Latin rectangle for r={r}; encoders exist for r in {sorted(R)}!")
  L = R[r]
  ctrl = set(2**i - 1 for i in range(r))
  a, b = (Kind.PREP_PLUS, Kind.PREP_0) if state == "zero" else (Kind.PREP_0, Kind.PREP_PLUS)
  M = [[(a, [q]) for q in sorted(ctrl)] + [(b, [q]) for q in range(L.n) if q not in ctrl]]
  for layer in L.layers():
    M.append([(Kind.CNOT, [c, t] if state == "zero" else [t, c]) for c, t in layer])
  return M

def latin_rectangle_circuit(r: int, state: str = "zero") -> list:
  "Flat location list of the Latin-rectangle encoder of Q_r; fault sites are numbered in order."
  C = []
  for moment in latin_moments(r, state):
    for k, T in moment: C.append(CircuitLocation(k, T, len(C)))
  return C

@dataclasses.dataclass(frozen = True)
class Tower:
  """
  A concatenated code. Level l applies `codes[l-1]` to level-(l−1) blocks. In `slice` mode the
  code acts separately on each logical slice j of its n sub-blocks, giving level-l logical index
  i = K⁽ˡ⁻¹⁾(k−1) + j. In `joint` mode its n positions are the K⁽ˡ⁻¹⁾ logical qubits of each of
  its n/K⁽ˡ⁻¹⁾ sub-blocks, in order.
  """
  codes: tuple
  modes: tuple

  def __post_init__(self):
    if len(self.codes) != len(self.modes): raise ValueError("Tower codes and modes differ in length!")
    for l in range(1, len(self.codes) + 1):
      if self.modes[l-1] not in ("slice", "joint"): raise ValueError(f"Unknown mode {self.modes[l-1]}!")
      if self.modes[l-1] == "joint" and self.codes[l-1].n % self.K(l-1) != 0:
        raise ValueError(f"{self.codes[l-1].name} cannot act jointly on blocks of {self.K(l-1)} qubits!")

  @property
  def levels(self) -> int: return len(self.codes)

  def truncate(self, l: int) -> "Tower": return Tower(self.codes[:l], self.modes[:l])

  def K(self, l: int = None) -> int:
    l = self.levels if l is None else l
    if l == 0: return 1
    c = self.codes[l-1]
    return c.k*self.K(l-1) if self.modes[l-1] == "slice" else c.k

  def sub(self, l: int) -> int:
    "Number of level-(l−1) blocks inside a level-l block."
    c = self.codes[l-1]
    return c.n if self.modes[l-1] == "slice" else c.n // self.K(l-1)

  def N(self, l: int = None) -> int:
    l = self.levels if l is None else l
    return 1 if l == 0 else self.sub(l)*self.N(l-1)

  def index(self, l: int) -> RegisterIndex: return RegisterIndex(l, self.K(l-1), self.codes[l-1].k)

  @functools.cache
  def supports(self, l: int, basis: str) -> np.ndarray:
    "(K_l, N_l) physical supports of the level-l logical X (`basis='X'`) or Z operators."
    c = self.codes[l-1]
    O = c.logical(basis).astype(np.int64)
    if l == 1: return O.astype(np.uint8)
    I = self.supports(l-1, basis).astype(np.int64)
    if self.modes[l-1] == "slice": S = np.kron(O, I)
    else: S = np.einsum("ksj,jq->ksq", O.reshape(c.k, self.sub(l), self.K(l-1)), I).reshape(c.k, -1)
    S = (S % 2).astype(np.uint8)
    S.flags.writeable = False
    return S
