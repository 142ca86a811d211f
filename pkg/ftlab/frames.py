"""
Batch Pauli-frame execution of gadget programs.

Every circuit executed here is built from preparations in the Z and X bases, CNOTs, Pauli gates,
identities and single-qubit measurements in the Z and X bases. For such circuits the noiseless
run that picks outcome 0 at every random measurement is a valid reference run, so each shot is
fully described by its Pauli frame relative to that reference: the X part of the frame on a qubit
is the flip of a Z measurement of it, the Z part the flip of an X measurement. Randomizing the
frame component that anticommutes with a preparation or a measurement makes random outcomes
uniformly random, which turns frame propagation into exact sampling.
"""
import dataclasses, logging
from collections.abc import Callable, Iterable

import numpy as np

from .engine import Kind, CircuitLocation
from .noise import NoiseParams, sample_pauli_flips

log = logging.getLogger(__name__)

SUPPORTED = frozenset((Kind.PREP_0, Kind.PREP_PLUS, Kind.CNOT, Kind.I, Kind.X, Kind.Y, Kind.Z,
                       Kind.MEASURE_Z, Kind.MEASURE_X))

class Counters:
  "Verification statistics shared by a batch and all of its rerun subsets."
  def __init__(self): self.C = {}

  def bump(self, cls: str, attempts: int, failures: int, reruns: int = 0, exhausted: int = 0):
    c = self.C.setdefault(cls, np.zeros(4, dtype = np.int64))
    c += (attempts, failures, reruns, exhausted)

  def __getitem__(self, cls: str) -> np.ndarray: return self.C.get(cls, np.zeros(4, dtype = np.int64))
  def __iter__(self): return iter(self.C)

class State:
  """
  Frames of a batch of shots. `x` and `z` are boolean (qubits, shots) arrays. `rec` holds
  measurement layers by key until a classical step consumes them; `marks` holds per-shot flags
  raised by classical steps; `regs` holds named decoded outputs; `failed` counts, per
  verification class and per shot, the verifications left failed.
  """
  def __init__(self, n_qubits: int, shots: int, rng: np.random.Generator, noise: NoiseParams = None,
               inject: dict = None, counters: Counters = None):
    self.x = np.zeros((n_qubits, shots), dtype = bool)
    self.z = np.zeros((n_qubits, shots), dtype = bool)
    self.rng, self.noise = rng, noise
    self.inject = {} if inject is None else inject
    self.counters = Counters() if counters is None else counters
    self.rec, self.marks, self.regs, self.failed = {}, {}, {}, {}
    self.quiet, self.force = 0, frozenset()

  @property
  def shots(self) -> int: return self.x.shape[1]

  @property
  def noisy(self) -> bool: return self.quiet == 0 and self.noise is not None and not self.noise.silent

  def subset(self, idx: np.ndarray) -> "State":
    "Returns a state holding copies of the shots in `idx`. Measurement records are not carried."
    S = State.__new__(State)
    S.x, S.z = self.x[:, idx], self.z[:, idx]
    S.rng, S.noise, S.inject, S.counters = self.rng, self.noise, self.inject, self.counters
    S.rec = {}
    S.marks = {k: v[idx] for k, v in self.marks.items()}
    S.regs = {k: v[idx] for k, v in self.regs.items()}
    S.failed = {k: v[idx] for k, v in self.failed.items()}
    S.quiet, S.force = self.quiet, self.force
    return S

  def merge(self, idx: np.ndarray, S: "State"):
    "Writes the subset state `S`, taken at `idx`, back into this state."
    self.x[:, idx], self.z[:, idx] = S.x, S.z
    for D, E in ((self.marks, S.marks), (self.regs, S.regs), (self.failed, S.failed)):
      for k, v in E.items():
        if k not in D: D[k] = np.zeros((self.shots,) + v.shape[1:], dtype = v.dtype)
        D[k][idx] = v

  def fail(self, cls: str, mask: np.ndarray):
    if cls not in self.failed: self.failed[cls] = np.zeros(self.shots, dtype = np.int32)
    self.failed[cls] += mask

  def flip(self, qubits: np.ndarray, xs: np.ndarray = None, zs: np.ndarray = None):
    "Applies per-shot Pauli frame flips; `xs`, `zs` are boolean (len(qubits), shots) arrays."
    if xs is not None: self.x[qubits] ^= xs
    if zs is not None: self.z[qubits] ^= zs

  def coin(self, shape) -> np.ndarray: return self.rng.random(shape) < 0.5

  def count(self, cls: str, *args, **kwargs):
    "Bumps verification counters; checks run inside noiseless sections are not counted."
    if self.quiet == 0: self.counters.bump(cls, *args, **kwargs)

@dataclasses.dataclass(frozen = True)
class Layer:
  "Locations of one kind acting in parallel. `targets` is (m,) or (m, 2) for CNOTs."
  kind: Kind
  targets: np.ndarray
  sites: np.ndarray
  key: str = None

  def __post_init__(self):
    if self.kind not in SUPPORTED:
      raise ValueError(f"Location kind {self.kind.name} cannot be executed by the frame sampler!")
    T = np.asarray(self.targets, dtype = np.int64)
    if T.ndim != (2 if self.kind is Kind.CNOT else 1):
      raise ValueError(f"Malformed targets for {self.kind.name} layer: shape {T.shape}!")
    if len(np.unique(T)) != T.size: raise ValueError("A layer may not act twice on the same qubit!")
    object.__setattr__(self, "targets", T)
    object.__setattr__(self, "sites", np.asarray(self.sites, dtype = np.int64))

  def __len__(self) -> int: return len(self.targets)

  def locations(self) -> Iterable[CircuitLocation]:
    T = self.targets.reshape(len(self.targets), -1)
    for t, s in zip(T, self.sites): yield CircuitLocation(self.kind, tuple(t), int(s))

def _noise(S: State, L: Layer, T: np.ndarray):
  if S.noisy:
    fx, fz = sample_pauli_flips(L.kind, len(L), S.shots, S.noise, S.rng)
    for a in range(T.shape[1]): S.flip(T[:, a], fx[a], fz[a])
  if len(S.inject) > 0:
    for i, s in enumerate(L.sites):
      F = S.inject.get(int(s))
      if F is None: continue
      xs, zs = F.bits()
      for a in range(T.shape[1]):
        q = T[i, a]
        if xs[a]: S.x[q] ^= True
        if zs[a]: S.z[q] ^= True

def apply(S: State, L: Layer):
  "Executes one layer on every shot of `S`, faults included."
  k = L.kind
  T = L.targets.reshape(len(L), -1)
  q = T[:, 0]
  if k is Kind.MEASURE_Z or k is Kind.MEASURE_X:
    _noise(S, L, T)
    if k is Kind.MEASURE_Z:
      S.rec[L.key] = S.x[q].copy()
      S.z[q] = S.coin((len(q), S.shots))
    else:
      S.rec[L.key] = S.z[q].copy()
      S.x[q] = S.coin((len(q), S.shots))
    return
  if k is Kind.PREP_0:
    S.x[q] = False
    S.z[q] = S.coin((len(q), S.shots))
  elif k is Kind.PREP_PLUS:
    S.z[q] = False
    S.x[q] = S.coin((len(q), S.shots))
  elif k is Kind.CNOT:
    c, t = T[:, 0], T[:, 1]
    S.x[t] ^= S.x[c]
    S.z[c] ^= S.z[t]
  elif k is Kind.X: S.x[q] ^= True
  elif k is Kind.Z: S.z[q] ^= True
  elif k is Kind.Y:
    S.x[q] ^= True
    S.z[q] ^= True
  _noise(S, L, T)

class Node:
  "A piece of a gadget program."
  def run(self, S: State): raise NotImplementedError
  def locations(self) -> Iterable: return iter(())
  def steps(self) -> Iterable: return iter(())

class Ops(Node):
  def __init__(self, layers: Iterable[Layer]): self.layers = tuple(L for L in layers if len(L) > 0)
  def run(self, S: State):
    for L in self.layers: apply(S, L)
  def locations(self):
    for L in self.layers: yield from L.locations()

class Seq(Node):
  def __init__(self, children: Iterable[Node]): self.children = tuple(children)
  def run(self, S: State):
    for c in self.children: c.run(S)
  def locations(self):
    for c in self.children: yield from c.locations()
  def steps(self):
    for c in self.children: yield from c.steps()

class Quiet(Node):
  "Runs its child without noise."
  def __init__(self, child: Node): self.child = child
  def run(self, S: State):
    S.quiet += 1
    try: self.child.run(S)
    finally: S.quiet -= 1
  def locations(self): return self.child.locations()
  def steps(self): return self.child.steps()

class Step(Node):
  "Noiseless, instantaneous classical processing: decoding, verification and frame corrections."
  def __init__(self, fn: Callable[[State], None], label: str): self.fn, self.label = fn, label
  def run(self, S: State): self.fn(S)
  def steps(self): yield self.label

class Check(Node):
  """
  Runs `child`, then evaluates the per-shot failure mask `test(S)`. With `reruns > 0`, shots that
  failed have the child run again, on those shots only, up to `reruns` times; shots still failing
  are counted under `cls`. With `redo` set, failing shots instead run the child once more with
  the gadget id `redo` in the state's `force` set, and are not tested again.
  """
  def __init__(self, child: Node, test: Callable[[State], np.ndarray], cls: str, reruns: int = 0,
               redo: int = None):
    self.child, self.test, self.cls, self.reruns, self.redo = child, test, cls, reruns, redo

  def run(self, S: State):
    self.child.run(S)
    F = self.test(S)
    S.count(self.cls, S.shots, int(F.sum()))
    if self.redo is not None:
      if F.any():
        idx = np.flatnonzero(F)
        T = S.subset(idx)
        T.force = T.force | {self.redo}
        self.child.run(T)
        T.force = S.force
        S.merge(idx, T)
        S.count(self.cls, 0, 0, reruns = len(idx))
      return
    for _ in range(self.reruns):
      if not F.any(): break
      idx = np.flatnonzero(F)
      T = S.subset(idx)
      self.child.run(T)
      G = self.test(T)
      S.merge(idx, T)
      S.count(self.cls, len(idx), int(G.sum()), reruns = len(idx))
      F = np.zeros(S.shots, dtype = bool)
      F[idx[G]] = True
    if self.reruns > 0 and F.any():
      S.count(self.cls, 0, 0, exhausted = int(F.sum()))
      log.warning(f"Verification class {self.cls}: rerun budget exhausted on {int(F.sum())} shots.")
    S.fail(self.cls, F)

  def locations(self): return self.child.locations()
  def steps(self):
    yield from self.child.steps()
    yield f"check {self.cls}"
