"""
Fault-tolerant gadgets of concatenated CSS codes, compiled into frame-sampler programs.

A level-l block is a set of physical qubits in canonical order (sub-block after sub-block, see
`codes.Tower`). Gadgets are built recursively: a level-l *rectangle* is the logical CNOT `gate`
(transversal level-(l−1) rectangles) followed by Knill error correction of both blocks; a level-l
preparation runs the register program of its code with level-(l−1) preparations, rectangles and
measurements. Level-1 gadgets are built from physical operations. Under the `lockstep` idle policy
a block that waits for a parallel gadget gets one idle location per layer of that gadget, e.g. the
data block while the Bell pair of its EC is prepared. Qubits inside a preparation never idle.
"""
import collections, contextlib, dataclasses, heapq, itertools, logging
from collections.abc import Callable

import numpy as np

from .engine import Kind
from .codes import CssCode, Tower, c4_code, c6_code, steane_code, hamming_code, code_by_name, \
                   latin_moments, C4_STAR_U
from .decoders import decode_block, knill_frame_update, E
from .frames import Layer, Node, Ops, Seq, Quiet, Step, Check, State
from .noise import NoiseParams
from .grammar import parse_circuit

log = logging.getLogger(__name__)

FAMILIES = ("hamming", "steane", "c4c6", "c4steane")
IDLE_POLICIES = ("lockstep", "none")
PREP_VARIANTS = ("goto", "conventional")

def tower_for(family: str, level: int, r: int = None) -> Tower:
  "The concatenated code simulated by a protocol family at a given level."
  if family not in FAMILIES: raise KeyError(f"Unknown protocol family {family}!")
  if not isinstance(level, (int, np.integer)) or level < 1: raise ValueError(f"Level must be a positive integer, got {level}!")
  if family == "hamming":
    if level != 1: raise ValueError("Hamming protocols are simulated at level 1 only!")
    if r is None: raise ValueError("Hamming protocols need the code parameter r!")
    return Tower((hamming_code(r),), ("slice",))
  if family == "steane": return Tower((steane_code(),)*level, ("slice",)*level)
  if family == "c4c6": return Tower((c4_code(),) + (c6_code(),)*(level - 1), ("slice",) + ("joint",)*(level - 1))
  return Tower((c4_code(),) + (steane_code(),)*(level - 1), ("slice",)*level)

@dataclasses.dataclass(frozen = True)
class Block:
  level: int
  q: np.ndarray

  def subs(self, tower: Tower) -> list:
    return [Block(self.level - 1, r) for r in self.q.reshape(tower.sub(self.level), -1)]

  @staticmethod
  def join(level: int, blocks) -> "Block": return Block(level, np.concatenate([b.q for b in blocks]))

  def __len__(self) -> int: return len(self.q)

@dataclasses.dataclass
class Program:
  """
  A register program: layers of operations on `size` registers, each either
  `("prep", state, reg)`, `("cx", control, target)`, `("relabel", reg, power)` or
  `("measure", basis, regs, key)`. `check(values)` maps decoded measurement values, keyed by
  measurement key and shaped (shots, len(regs), K), to a per-shot failure mask. `fixup(values)`
  returns logical frame corrections as (letter, output positions, per-shot bits).
  """
  name: str
  size: int
  layers: list
  out: list
  check: Callable
  fixup: Callable = None

def _erased(V: np.ndarray) -> np.ndarray: return (V == E).any(axis = tuple(range(1, V.ndim)))

def _nonzero(H: np.ndarray, V: np.ndarray) -> np.ndarray:
  "Whether any parity in the rows of H fails on any logical slice of V (shots, n, K)."
  v = np.where(V == E, 0, V).astype(np.int64)
  return ((np.einsum("rn,snk->srk", H.astype(np.int64), v) % 2) > 0).any(axis = (1, 2))

def c4_program(state: str) -> Program:
  """
  C₄ |00̄⟩: two Bell pairs on the data and two on the check qubits, a transversal CNOT into the
  check qubits and a Z measurement of them. The check parity is i₁+i₂+i₃+i₄; i₁+i₃ selects X̄₂.
  |++̄⟩ is the dual circuit.
  """
  z = state == "zero"
  a, b = ("plus", "zero") if z else ("zero", "plus")
  L = [
    [("prep", a, q) for q in (0, 2, 4, 5)] + [("prep", b, q) for q in (1, 3, 6, 7)],
    [("cx", c, t) if z else ("cx", t, c) for c, t in ((0, 1), (2, 3), (4, 6), (5, 7))],
    [("cx", j, j + 4) if z else ("cx", j + 4, j) for j in range(4)],
    [("measure", "Z" if z else "X", (4, 5, 6, 7), "c")],
  ]
  def check(V): return _erased(V["c"]) | (V["c"][:, :, 0].sum(1) % 2 == 1)
  def fixup(V):
    i = V["c"][:, :, 0].astype(np.int64)
    return [("X" if z else "Z", [2, 3], (i[:, 0] + i[:, 2]) % 2 == 1)]
  return Program(f"C4.{state}", 8, L, [0, 1, 2, 3], check, fixup)

def c6_program(state: str) -> Program:
  """
  C₆ |00̄⟩ encodes (a, ∗u a, ∗u² a) from a |+̄+̄⟩ register and verifies a second copy through a
  transversal CNOT and Z measurement: both Z checks and both Z̄ readouts must be 0 and no register
  may decode to E. |++̄⟩ encodes (r₁, r₂, r₁+r₂) and is verified dually.
  """
  code = c6_code()
  if state == "zero":
    L = [
      [("prep", "plus", 0), ("prep", "zero", 1), ("prep", "zero", 2),
       ("prep", "plus", 3), ("prep", "zero", 4), ("prep", "zero", 5)],
      [("cx", 0, 1), ("cx", 3, 4)],
      [("cx", 0, 2), ("cx", 3, 5)],
      [("relabel", 1, 1), ("relabel", 2, 2), ("relabel", 4, 1), ("relabel", 5, 2)],
      [("cx", 0, 3), ("cx", 1, 4), ("cx", 2, 5)],
      [("measure", "Z", (3, 4, 5), "k")],
    ]
    H = np.vstack((code.hz, code.lz))
  else:
    L = [
      [("prep", "plus", 0), ("prep", "plus", 1), ("prep", "zero", 2),
       ("prep", "plus", 3), ("prep", "plus", 4), ("prep", "zero", 5)],
      [("cx", 0, 2), ("cx", 3, 5)],
      [("cx", 1, 2), ("cx", 4, 5)],
      [("cx", 3, 0), ("cx", 4, 1), ("cx", 5, 2)],
      [("measure", "X", (3, 4, 5), "k")],
    ]
    H = np.vstack((code.hx, code.lx))
  def check(V):
    m = V["k"].reshape(len(V["k"]), 6, 1)
    return _erased(m) | _nonzero(H, m)
  return Program(f"C6.{state}", 6, L, [0, 1, 2], check)

# Encoder of |0̄⟩ for the Steane code followed by a single ancilla reading Z₃Z₅Z₆ (0-indexed 2, 4, 5).
GOTO_PLUS = (0, 1, 3)
GOTO_CNOTS = (((0, 2), (3, 4)), ((1, 5),), ((0, 6),), ((1, 2), (3, 5)), ((0, 4),), ((5, 6),))
GOTO_CHECK = (2, 4, 5)

def goto_program(state: str) -> Program:
  "Steane |0̄⟩ (|+̄⟩) with one verification ancilla that must read 0."
  z = state == "zero"
  a, b = ("plus", "zero") if z else ("zero", "plus")
  L = [[("prep", a if q in GOTO_PLUS else b, q) for q in range(7)]]
  for M in GOTO_CNOTS: L.append([("cx", c, t) if z else ("cx", t, c) for c, t in M])
  L[-1].append(("prep", "zero" if z else "plus", 7))
  for q in GOTO_CHECK: L.append([("cx", q, 7) if z else ("cx", 7, q)])
  L.append([("measure", "Z" if z else "X", (7,), "a")])
  def check(V): return _erased(V["a"]) | (V["a"] != 0).any(axis = (1, 2))
  return Program(f"Steane.{state}.goto", 8, L, list(range(7)), check)

# Parities of the measured copy checked by the conventional Steane preparation (0-indexed).
STEANE_COPY_CHECKS = ((0, 2, 4, 6), (1, 2, 5, 6), (0, 1, 2))

def copy_program(code: CssCode, state: str) -> Program:
  """
  Hamming-code |0̄⟩ (|+̄⟩): two Latin-rectangle encoders, a transversal CNOT from the data to the
  copy (reversed for |+̄⟩) and a transversal measurement of the copy, which must show zero
  syndrome and zero logical readouts. The Steane code checks only `STEANE_COPY_CHECKS`.
  """
  z = state == "zero"
  r = (code.n + 1).bit_length() - 1
  n = code.n
  M = latin_moments(r, state)
  L = []
  for moment in M:
    ops = []
    for k, T in moment:
      for off in (0, n):
        if k is Kind.CNOT: ops.append(("cx", T[0] + off, T[1] + off))
        else: ops.append(("prep", "zero" if k is Kind.PREP_0 else "plus", T[0] + off))
    L.append(ops)
  L.append([("cx", j, j + n) if z else ("cx", j + n, j) for j in range(n)])
  L.append([("measure", "Z" if z else "X", tuple(range(n, 2*n)), "c")])
  if code.name == "Steane":
    H = np.zeros((len(STEANE_COPY_CHECKS), n), dtype = np.uint8)
    for i, s in enumerate(STEANE_COPY_CHECKS): H[i, list(s)] = 1
  else: H = np.vstack((code.checks("Z" if z else "X"), code.logical("Z" if z else "X")))
  def check(V): return _erased(V["c"]) | _nonzero(H, V["c"])
  return Program(f"{code.name}.{state}.copy", 2*n, L, list(range(n)), check)

def program_for(code: CssCode, state: str, variant: str = "goto") -> Program:
  if state not in ("zero", "plus"): raise ValueError(f"Unknown logical state {state}!")
  if code.name == "C4": return c4_program(state)
  if code.name == "C6": return c6_program(state)
  if code.name == "Steane":
    if variant not in PREP_VARIANTS: raise ValueError(f"Unknown Steane prep variant {variant}!")
    return goto_program(state) if variant == "goto" else copy_program(code, state)
  if code.name.startswith("Q"): return copy_program(code, state)
  raise ValueError(f"No preparation gadget for {code.name}!")

@dataclasses.dataclass(frozen = True)
class VerificationRecord:
  gadget_id: int
  cls: str
  condition: str

class Builder:
  """
  Compiles gadgets of a tower into programs. Qubits freed by measurements are reused by later
  gadgets. Failed verifications stay flagged per shot for post-selection accounting; `rerun=True`
  instead reruns the failing preparations on those shots, at most `reruns` times. Shots whose
  Bell-pair error detection fires always redo the pair with error correction in place of detection.
  """
  def __init__(self, tower: Tower, family: str, variant: str = "goto", idle_policy: str = "lockstep",
               rerun: bool = False, reruns: int = 64):
    if idle_policy not in IDLE_POLICIES: raise ValueError(f"Unknown idle policy {idle_policy}!")
    if variant not in PREP_VARIANTS: raise ValueError(f"Unknown prep variant {variant}!")
    self.tower, self.family, self.variant, self.idle_policy = tower, family, variant, idle_policy
    self.reruns = reruns if rerun else 0
    self.ed_levels = set(range(1, tower.levels + 1)) if family == "c4c6" else {1} if family == "c4steane" else set()
    self.n, self.pool, self.sites, self.quiet = 0, [], 0, 0
    self.ids = itertools.count()
    self.instances = collections.Counter()
    self.records = []

  def alloc(self, m: int) -> np.ndarray:
    Q = [heapq.heappop(self.pool) for _ in range(min(m, len(self.pool)))]
    Q += list(range(self.n, self.n + m - len(Q)))
    self.n = max(self.n, Q[-1] + 1) if len(Q) > 0 else self.n
    return np.array(Q, dtype = np.int64)

  def release(self, q: np.ndarray):
    for x in q: heapq.heappush(self.pool, int(x))

  def key(self, prefix: str = "k") -> str: return f"{prefix}{next(self.ids)}"

  def layer(self, kind: Kind, targets, key: str = None) -> Layer:
    T = np.asarray(targets, dtype = np.int64)
    L = Layer(kind, T, np.arange(self.sites, self.sites + len(T)), key)
    self.sites += len(T)
    return L

  def idle(self, q, times: int = 1) -> list:
    q = np.sort(np.asarray(q, dtype = np.int64).ravel())
    if self.idle_policy == "none" or len(q) == 0 or times <= 0: return []
    return [self.layer(Kind.I, q) for _ in range(times)]

  @contextlib.contextmanager
  def noiseless(self):
    "Gadgets built inside this context run noiselessly and are left out of the instance counts."
    self.quiet += 1
    try: yield
    finally: self.quiet -= 1

  def register(self, cls: str, condition: str) -> int:
    i = next(self.ids)
    if self.quiet == 0: self.instances[cls] += 1
    self.records.append(VerificationRecord(i, cls, condition))
    return i

  def _emit(self, P: Program, regs: np.ndarray, keys: dict) -> tuple:
    "Level-1 instantiation of a register program as physical layers."
    layers = []
    for ops in P.layers:
      groups, meas = collections.defaultdict(list), []
      for op in ops:
        if op[0] == "prep":
          q = int(regs[op[2]])
          groups[Kind.PREP_0 if op[1] == "zero" else Kind.PREP_PLUS].append(q)
        elif op[0] == "cx":
          c, t = int(regs[op[1]]), int(regs[op[2]])
          groups[Kind.CNOT].append((c, t))
        elif op[0] == "measure":
          qs = [int(regs[r]) for r in op[2]]
          meas.append((Kind.MEASURE_Z if op[1] == "Z" else Kind.MEASURE_X, qs, keys[op[3]]))
        else: raise ValueError(f"Register operation {op[0]} needs encoded registers!")
      for k, T in groups.items(): layers.append(self.layer(k, T))
      for k, qs, key in meas: layers.append(self.layer(k, qs, key))
    return layers, len(P.layers)

  def _verify(self, l: int, P: Program, keys: dict, bases: dict, sizes: dict, out: np.ndarray, mark: str) -> Step:
    tower = self.tower
    def f(S: State):
      V = {}
      for name, key in keys.items():
        b = S.rec.pop(key).T
        if l == 1: V[name] = b.reshape(S.shots, sizes[name], 1).astype(np.uint8)
        else: V[name] = decode_block(tower, b.reshape(S.shots, sizes[name], -1), bases[name], l - 1)
      S.marks[mark] = P.check(V)
      if P.fixup is not None:
        for letter, pos, bits in P.fixup(V):
          m = np.broadcast_to(np.asarray(bits, dtype = bool), (len(pos), S.shots))
          S.flip(out[pos], m if letter == "X" else None, m if letter == "Z" else None)
    return Step(f, f"verify {P.name}")

  def prep(self, l: int, state: str) -> tuple:
    "Verified preparation of a level-l |0̄⟩ or |+̄⟩ block. Returns (node, block, depth)."
    code = self.tower.codes[l - 1]
    P = program_for(code, state, self.variant)
    cls = f"L{l}.{code.name}.{state}"
    mark = self.key("v")
    keys, bases, sizes = {}, {}, {}
    for ops in P.layers:
      for op in ops:
        if op[0] == "measure": keys[op[3]], bases[op[3]], sizes[op[3]] = self.key("m"), op[1], len(op[2])
    if l == 1:
      regs = self.alloc(P.size)
      layers, depth = self._emit(P, regs, keys)
      body = [Ops(layers)]
      out = Block(1, regs[P.out])
      self.release(np.setdiff1d(regs, out.q))
    else:
      depth, body, blocks = None, [], {}
      for ops in P.layers:
        for op in ops:
          if op[0] == "prep":
            n, blocks[op[2]], _ = self.prep(l - 1, op[1])
            body.append(n)
          elif op[0] == "cx":
            n, blocks[op[1]], blocks[op[2]] = self.rect(l - 1, blocks[op[1]], blocks[op[2]])
            body.append(n)
          elif op[0] == "relabel": blocks[op[1]] = self.star_u(blocks[op[1]], op[2])
          else:
            qs = np.concatenate([blocks[r].q for r in op[2]])
            body.append(Ops([self.layer(Kind.MEASURE_Z if op[1] == "Z" else Kind.MEASURE_X, qs, keys[op[3]])]))
            self.release(qs)
      out = Block.join(l, [blocks[r] for r in P.out])
    body.append(self._verify(l, P, keys, bases, sizes, out.q, mark))
    self.register(cls, P.name)
    return Check(Seq(body), lambda S: S.marks[mark], cls, reruns = self.reruns), out, depth

  def star_u(self, B: Block, power: int) -> Block:
    """
    Logical ∗u (power 1) or ∗u² (power 2) on a C₄ or C₆ block, realized as a relabeling of its
    physical qubits. On C₆ the logical ∗u is the transversal ∗u² of its registers.
    """
    power %= 3
    if power == 0: return B
    code = self.tower.codes[B.level - 1]
    if code.name == "C4":
      q = B.q
      for _ in range(power):
        p = np.empty_like(q)
        p[C4_STAR_U] = q
        q = p
      return Block(B.level, q)
    if code.name == "C6": return Block.join(B.level, [self.star_u(s, 2*power) for s in B.subs(self.tower)])
    raise ValueError(f"∗u gadgets exist for C4 and C6 blocks only, not {code.name}!")

  def gate(self, l: int, a: Block, b: Block) -> tuple:
    "Logical CNOT⊗K from block `a` to block `b`: transversal level-(l−1) rectangles."
    if l == 1: return Ops([self.layer(Kind.CNOT, np.stack((a.q, b.q), axis = 1))]), a, b
    N, A, B = [], [], []
    for x, y in zip(a.subs(self.tower), b.subs(self.tower)):
      n, x, y = self.rect(l - 1, x, y)
      N.append(n); A.append(x); B.append(y)
    return Seq(N), Block.join(l, A), Block.join(l, B)

  def rect(self, l: int, a: Block, b: Block) -> tuple:
    "A level-l CNOT rectangle: the logical CNOT followed by EC on both blocks."
    g, a, b = self.gate(l, a, b)
    ea, a, _ = self.ec(l, a)
    eb, b, _ = self.ec(l, b)
    return Seq((g, ea, eb)), a, b

  def bell(self, l: int, raw: bool = False) -> tuple:
    """
    Logical Bell pair |Φ⁺⟩⊗K on two level-l blocks. Returns (node, a, b, depth). Where the
    protocol asks for it, both halves then go through error detection; shots where detection
    fires redo the whole pair with error correction in place of detection.
    """
    n0, Q, d0 = self.prep(l, "zero")
    n1, P, d1 = self.prep(l, "plus")
    N = [n0, n1]
    if l == 1:
      D = max(d0, d1)
      N.append(Ops(self.idle(P.q, D - d1) + self.idle(Q.q, D - d0)))
    g, P, Q = self.gate(l, P, Q)
    N.append(g)
    depth = None if l > 1 else D + 1
    if raw or l not in self.ed_levels: return Seq(N), P, Q, depth
    gid, mark = next(self.ids), self.key("ed")
    def reset(S: State): S.marks[mark] = np.zeros(S.shots, dtype = bool)
    ea, P, dd = self.ec(l, P, mode = "ed", owner = gid, mark = mark)
    eb, Q, _ = self.ec(l, Q, mode = "ed", owner = gid, mark = mark)
    cls = f"L{l}.{self.tower.codes[l - 1].name}.bell"
    self.register(cls, "error detection on both halves")
    body = Seq([Step(reset, "clear detection"), Seq(N), ea, eb])
    node = Check(body, lambda S: S.marks[mark], cls, redo = gid)
    return node, P, Q, (None if l > 1 else depth + dd)

  def ec(self, l: int, data: Block, mode: str = "ec", owner: int = None, mark: str = None) -> tuple:
    """
    Knill error correction (`mode='ec'`) or detection (`mode='ed'`) of a level-l block by
    teleportation through a fresh Bell pair. Returns (node, output block, depth).
    """
    bn, A, B, bd = self.bell(l, raw = mode == "ed")
    N = [bn]
    if l == 1: N.append(Ops(self.idle(data.q, bd)))
    g, data, A = self.gate(l, data, A)
    N.append(g)
    if l == 1: N.append(Ops(self.idle(B.q, 2)))
    kx, kz = self.key("mx"), self.key("mz")
    N.append(Ops([self.layer(Kind.MEASURE_X, data.q, kx), self.layer(Kind.MEASURE_Z, A.q, kz)]))
    self.release(data.q)
    self.release(A.q)
    tower = self.tower
    Xs, Zs = tower.supports(l, "X").astype(np.int64).T, tower.supports(l, "Z").astype(np.int64).T
    def teleport(S: State):
      xv = decode_block(tower, S.rec.pop(kx).T, "X", l)
      zv = decode_block(tower, S.rec.pop(kz).T, "Z", l)
      m = "ec" if mode == "ec" or owner in S.force else "ed"
      c = knill_frame_update(xv, zv, m, S.rng)
      S.flip(B.q, (Xs @ c.x.T.astype(np.int64)) % 2 == 1, (Zs @ c.z.T.astype(np.int64)) % 2 == 1)
      if m == "ed": S.marks[mark] |= c.erased.any(-1)
    N.append(Step(teleport, f"teleport L{l} {mode}"))
    return Seq(N), B, (None if l > 1 else bd + 2)

  def detect(self, l: int, data: Block) -> tuple:
    "Knill error detection of a block as a checked gadget: shots whose readouts decode to E fail it."
    gid, mark = next(self.ids), self.key("ed")
    def reset(S: State): S.marks[mark] = np.zeros(S.shots, dtype = bool)
    e, out, _ = self.ec(l, data, mode = "ed", owner = gid, mark = mark)
    cls = f"L{l}.{self.tower.codes[l - 1].name}.ed"
    self.register(cls, "error detection")
    return Check(Seq([Step(reset, "clear detection"), e]), lambda S: S.marks[mark], cls), out

  def readout(self, blocks: dict, basis: str) -> Node:
    "Noiseless transversal measurement of named blocks, decoded into `S.regs[name]` (E kept)."
    N, keys = [], {}
    for name, B in blocks.items():
      keys[name] = self.key("r")
      N.append(self.layer(Kind.MEASURE_Z if basis == "Z" else Kind.MEASURE_X, B.q, keys[name]))
    tower = self.tower
    def f(S: State):
      for name, B in blocks.items():
        S.regs[name] = decode_block(tower, S.rec.pop(keys[name]).T, basis, B.level)
    return Quiet(Seq([Ops(N), Step(f, f"readout {basis}")]))

@dataclasses.dataclass
class GadgetCircuit:
  """
  A compiled gadget: its program, the tower it encodes, the number of physical qubits it uses,
  its named output blocks, and its verification records and per-class instance counts.
  """
  program: Node
  tower: Tower
  n_qubits: int
  outputs: dict
  verification_records: list
  instances: dict
  meta: dict = dataclasses.field(default_factory = dict)

  @property
  def locations(self) -> list:
    "Flat location list of a first attempt (reruns excluded)."
    if "_locations" not in self.meta: self.meta["_locations"] = list(self.program.locations())
    return self.meta["_locations"]

  @property
  def frame_corrections(self) -> list: return [s for s in self.program.steps() if s.startswith("teleport") or s.startswith("verify")]

  def run(self, shots: int, noise: NoiseParams = None, seed: int = 0, inject: dict = None) -> State:
    "Executes `shots` shots in one batch and returns the final frames."
    S = State(self.n_qubits, shots, np.random.default_rng(np.random.SeedSequence(seed)), noise, inject)
    self.program.run(S)
    return S

FAMILY_OF = {"C4": "c4c6", "C6": "c4c6", "Steane": "steane"}

def _family(code) -> tuple:
  "Maps a code (object or name) to (family, minimum level, r)."
  c = code_by_name(code) if isinstance(code, str) else code
  if not isinstance(c, CssCode): raise TypeError(f"Expected a CssCode or code name, got {type(code)}!")
  if c.name.startswith("Q"): return "hamming", 1, int(c.name[1:])
  if c.name not in FAMILY_OF: raise ValueError(f"Unsupported code {c.name}!")
  return FAMILY_OF[c.name], (2 if c.name == "C6" else 1), None

def _builder(code, level, variant = "goto", idle_policy = "lockstep", rerun = False, family = None) -> Builder:
  fam, lmin, r = _family(code)
  fam = fam if family is None else family
  level = lmin if level is None else level
  if level < lmin: raise ValueError(f"{code} gadgets start at level {lmin}!")
  return Builder(tower_for(fam, level, r), fam, variant, idle_policy, rerun)

def _circuit(b: Builder, program: Node, outputs: dict, **meta) -> GadgetCircuit:
  return GadgetCircuit(program, b.tower, b.n, outputs, list(b.records), dict(b.instances), meta)

def build_prep(code, state: str = "zero", variant: str = "goto", level: int = None, readout: str = None,
               **kwargs) -> GadgetCircuit:
  "A verified preparation gadget; with `readout`, its output is measured noiselessly and decoded."
  b = _builder(code, level, variant, **kwargs)
  n, out, _ = b.prep(b.tower.levels, state)
  N = [n] if readout is None else [n, b.readout({"out": out}, readout)]
  return _circuit(b, Seq(N), {"out": out}, kind = "prep", state = state)

def build_bell_prep(code, level: int = None, readout: str = None, **kwargs) -> GadgetCircuit:
  b = _builder(code, level, **kwargs)
  n, A, B, _ = b.bell(b.tower.levels)
  N = [n] if readout is None else [n, b.readout({"a": A, "b": B}, readout)]
  return _circuit(b, Seq(N), {"a": A, "b": B}, kind = "bell")

def _entry(b: Builder, B: Block) -> Node:
  "Noiseless identity layer on a block: fault sites for injecting errors into a gadget's input."
  return Quiet(Ops([b.layer(Kind.I, B.q)]))

def build_knill_ec(code, level: int = None, state: str = "zero", readout: str = None, repeat: int = 1,
                   mode: str = "ec", **kwargs) -> GadgetCircuit:
  """
  Knill EC on a block prepared noiselessly in `state` (`zero`, `plus` or `bell`; for `bell` the
  output is entangled with a reference block `ref`). The input passes through an `entry` layer
  whose sites can carry injected faults. `mode='ed'` builds error detection instead, which
  flags the shots it catches.
  """
  if mode not in ("ec", "ed"): raise ValueError(f"Unknown Knill gadget mode {mode}!")
  b = _builder(code, level, **kwargs)
  l = b.tower.levels
  out = {}
  with b.noiseless():
    if state == "bell":
      n, out["ref"], D, _ = b.bell(l)
    else: n, D, _ = b.prep(l, state)
  N = [Quiet(n)]
  out["in"] = D
  entry = _entry(b, D)
  N.append(entry)
  for _ in range(repeat):
    e, D = b.ec(l, D)[:2] if mode == "ec" else b.detect(l, D)
    N.append(e)
  out["out"] = D
  if readout is not None:
    N.append(b.readout({"out": D} | ({"ref": out["ref"]} if "ref" in out else {}), readout))
  c = _circuit(b, Seq(N), out, kind = mode, state = state)
  c.meta["entry_sites"] = [loc.fault_site_id for loc in entry.locations()]
  return c

def _logical_paulis(b: Builder, B: Block, letter: str, bits, quiet: bool = True) -> Node:
  "Logical Paulis: `letter`ₖ on the block for every k with bits[k] = 1."
  S = b.tower.supports(B.level, letter).astype(np.int64)
  sel = np.asarray(bits, dtype = np.int64)
  if len(sel) != len(S): raise ValueError(f"Expected {len(S)} logical bits, got {len(sel)}!")
  m = (sel @ S) % 2 == 1
  if not m.any(): return Seq(())
  n = Ops([b.layer(Kind.X if letter == "X" else Kind.Z, B.q[m])])
  return Quiet(n) if quiet else n

def build_star_u(variant: str = "u", level: int = 1, logical: tuple = (0, 0), readout: str = "Z",
                 **kwargs) -> GadgetCircuit:
  """
  Applies ∗u (`u`) or ∗u² (`u2`) to a C₄ (level 1) or C₆ (level ≥ 2) block prepared noiselessly in
  the logical basis state `logical`, then reads it out.
  """
  if variant not in ("u", "u2"): raise ValueError(f"Unknown ∗u variant {variant}!")
  b = Builder(tower_for("c4c6", level), "c4c6", **kwargs)
  with b.noiseless(): n, B, _ = b.prep(level, "zero")
  N = [Quiet(n), _logical_paulis(b, B, "X", logical)]
  B = b.star_u(B, 1 if variant == "u" else 2)
  N.append(b.readout({"out": B}, readout))
  return _circuit(b, Seq(N), {"out": B}, kind = "star_u", variant = variant)

def build_transversal(kind: str, code, level: int = None, logical: tuple = None, **kwargs) -> GadgetCircuit:
  """
  Transversal gadgets on noiselessly prepared blocks, read out noiselessly into `regs`:
  `cnot` takes a control block in the Z-basis state `logical` and a |0̄⟩ target; `pauli` applies
  the X̄ pattern `logical` to a |0̄⟩ block; `measure_Z` and `measure_X` measure a |0̄⟩ or |+̄⟩ block
  transversally.
  """
  b = _builder(code, level, **kwargs)
  l = b.tower.levels
  K = b.tower.K(l)
  bits = (1,) + (0,)*(K - 1) if logical is None else tuple(logical)
  if kind == "cnot":
    with b.noiseless():
      n1, A, _ = b.prep(l, "zero")
      n2, B, _ = b.prep(l, "zero")
    g, A, B = b.gate(l, A, B)
    N = [Quiet(Seq([n1, n2, _logical_paulis(b, A, "X", bits, quiet = False)])), g, b.readout({"a": A, "b": B}, "Z")]
    out = {"a": A, "b": B}
  elif kind == "pauli":
    with b.noiseless(): n, A, _ = b.prep(l, "zero")
    N = [Quiet(n), _logical_paulis(b, A, "X", bits, quiet = False), b.readout({"out": A}, "Z")]
    out = {"out": A}
  elif kind in ("measure_Z", "measure_X"):
    z = kind == "measure_Z"
    with b.noiseless(): n, A, _ = b.prep(l, "zero" if z else "plus")
    key = b.key("t")
    tower = b.tower
    def f(S: State): S.regs["out"] = decode_block(tower, S.rec.pop(key).T, "Z" if z else "X", l)
    N = [Quiet(n), Ops([b.layer(Kind.MEASURE_Z if z else Kind.MEASURE_X, A.q, key)]), Step(f, "decode")]
    out = {"out": A}
  else: raise ValueError(f"Unknown transversal gadget {kind}!")
  return _circuit(b, Seq(N), out, kind = kind)

@dataclasses.dataclass(frozen = True)
class BenchmarkSpec:
  """
  Reference-entanglement benchmark of the logical CNOT⊗K. `variant='simplified'` runs one noisy
  CNOT rectangle followed by a noiseless CNOT (level-2 Steane and C₄/Steane only); `full` runs ten.
  Failed verifications are kept flagged for post-selection or leading-order accounting;
  `rerun=True` reruns them inside the circuit instead.
  """
  family: str
  level: int = 1
  r: int = None
  r_next: int = None
  variant: str = "full"
  shots: int = 10**6
  noise: NoiseParams = NoiseParams(0.0, 0.0)
  seed: int = 0
  prep: str = "goto"
  idle_policy: str = "lockstep"
  rerun: bool = False

  def __post_init__(self):
    tower_for(self.family, self.level, self.r)
    if self.variant not in ("full", "simplified"): raise ValueError(f"Unknown benchmark variant {self.variant}!")
    if self.variant == "simplified" and not (self.level == 2 and self.family in ("steane", "c4steane")):
      raise ValueError("The single-round variant exists for level-2 Steane and C4/Steane only!")
    if self.r_next is not None:
      if self.family != "hamming": raise ValueError("Only Hamming protocols take a next code r_next!")
      if not (self.r <= self.r_next <= 8):
        raise ValueError(f"Next Hamming code must satisfy r <= r_next <= 8, got ({self.r}, {self.r_next})!")
    if self.shots < 0: raise ValueError(f"Shot count must be nonnegative, got {self.shots}!")
    if self.prep not in PREP_VARIANTS: raise ValueError(f"Unknown prep variant {self.prep}!")
    if self.idle_policy not in IDLE_POLICIES: raise ValueError(f"Unknown idle policy {self.idle_policy}!")

  @property
  def rounds(self) -> int: return 10 if self.variant == "full" else 1

  @property
  def code(self) -> str: return f"Q{self.r}" if self.family == "hamming" else self.family

def build_cnot_benchmark(spec: BenchmarkSpec) -> GadgetCircuit:
  """
  Two noiseless logical Bell pairs (reference, data), `rounds` noisy CNOT rectangles on the data
  blocks, a noiseless CNOT undoing them when their number is odd, and a noiseless Bell
  measurement. `regs['fail']` is the per-shot, per-logical-qubit failure flag.
  """
  tower = tower_for(spec.family, spec.level, spec.r)
  b = Builder(tower, spec.family, spec.prep, spec.idle_policy, spec.rerun)
  L = spec.level
  with b.noiseless():
    q1, R1, D1, _ = b.bell(L)
    q2, R2, D2, _ = b.bell(L)
  N = [Quiet(Seq([q1, q2]))]
  for _ in range(spec.rounds):
    g, D1, D2 = b.gate(L, D1, D2)
    e1, D1, _ = b.ec(L, D1)
    e2, D2, _ = b.ec(L, D2)
    N += [g, e1, e2]
  if spec.rounds % 2 == 1:
    with b.noiseless(): g, D1, D2 = b.gate(L, D1, D2)
    N.append(Quiet(g))
  keys = [b.key("b") for _ in range(4)]
  M = Ops([b.layer(Kind.CNOT, np.stack((R1.q, D1.q), axis = 1)), b.layer(Kind.CNOT, np.stack((R2.q, D2.q), axis = 1))])
  Z = Ops([b.layer(Kind.MEASURE_X, R1.q, keys[0]), b.layer(Kind.MEASURE_Z, D1.q, keys[1]),
           b.layer(Kind.MEASURE_X, R2.q, keys[2]), b.layer(Kind.MEASURE_Z, D2.q, keys[3])])
  def final(S: State):
    F = np.zeros((S.shots, tower.K(L)), dtype = bool)
    for key, basis in zip(keys, "XZXZ"):
      v = decode_block(tower, S.rec.pop(key).T, basis, L)
      F |= np.where(v == E, S.coin(v.shape), v == 1)
    S.regs["fail"] = F
  N.append(Quiet(Seq([M, Z, Step(final, "bell measurement")])))
  c = _circuit(b, Seq(N), {"ref": (R1, R2), "data": (D1, D2)}, kind = "benchmark", spec = spec)
  log.info(f"Compiled {spec.code} level-{L} benchmark: {c.n_qubits} qubits, {b.sites} locations, "
           f"{sum(b.instances.values())} verification instances.")
  return c

def dump(circuit) -> str:
  """
  Text dump of a gadget program: one location per line as `kind targets #site [if parity]`;
  classical steps and noiseless sections appear as `#` comment lines.
  """
  lines = []
  def walk(n: Node):
    if isinstance(n, Ops):
      for L in n.layers:
        lines.extend(str(loc) for loc in L.locations())
    elif isinstance(n, Seq):
      for c in n.children: walk(c)
    elif isinstance(n, Quiet):
      lines.append("# noiseless {")
      walk(n.child)
      lines.append("# }")
    elif isinstance(n, Check):
      walk(n.child)
      lines.append(f"# check {n.cls}")
    elif isinstance(n, Step): lines.append(f"# {n.label}")
  if isinstance(circuit, GadgetCircuit): walk(circuit.program)
  elif isinstance(circuit, Node): walk(circuit)
  else: lines.extend(str(loc) for loc in circuit)
  return "\n".join(lines) + "\n"

def parse_dump(text: str) -> list:
  "Parses a circuit dump back into a flat list of `CircuitLocation`s; comment lines are skipped."
  return parse_circuit(text)
