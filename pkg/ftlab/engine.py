import enum, dataclasses, logging
from collections.abc import Iterable, Sequence

import numpy as np
import stim

log = logging.getLogger(__name__)

class Kind(enum.Enum):
  "Location kinds. Values are the stim instruction names used for execution and export."
  PREP_0 = "R"
  PREP_PLUS = "RX"
  I = "I"
  X = "X"
  Y = "Y"
  Z = "Z"
  H = "H"
  S = "S"
  CNOT = "CX"
  MEASURE_Z = "M"
  MEASURE_X = "MX"

  @property
  def arity(self) -> int: return 2 if self is Kind.CNOT else 1
  @property
  def is_prep(self) -> bool: return self in (Kind.PREP_0, Kind.PREP_PLUS)
  @property
  def is_measurement(self) -> bool: return self in (Kind.MEASURE_Z, Kind.MEASURE_X)
  @property
  def is_unitary(self) -> bool: return not (self.is_prep or self.is_measurement)
  @property
  def is_pauli(self) -> bool: return self in (Kind.I, Kind.X, Kind.Y, Kind.Z)

  @staticmethod
  def parse(s: str) -> "Kind":
    "Accepts either the enum name (`prep_0`, `cnot`, ...) or the stim name (`R`, `CX`, ...)."
    try: return Kind[s.upper()]
    except KeyError: pass
    try: return Kind(s.upper())
    except ValueError: raise KeyError(f"Unknown location kind {s}!")

class PauliOperator:
  """
  An n-qubit Pauli operator with a sign. The product of two operators keeps its phase exactly, so
  the sign may be ±1 or ±i. The Y convention is that of stim: Y = iXZ, so XZ = −iY.
  """

  def __init__(self, letters, sign: complex = 1):
    if isinstance(letters, stim.PauliString): P = letters.copy()
    elif isinstance(letters, str): P = stim.PauliString(letters.replace("_", "I"))
    elif isinstance(letters, int): P = stim.PauliString(letters)
    else: raise TypeError(f"Expected str, int or stim.PauliString, got {type(letters)}!")
    if sign != 1: P.sign = P.sign*sign
    if P.sign not in (1, -1, 1j, -1j): raise ValueError(f"Invalid Pauli sign {P.sign}!")
    self.P = P

  @classmethod
  def identity(cls, n: int) -> "PauliOperator": return cls(n)

  @classmethod
  def from_bits(cls, xs: Iterable, zs: Iterable, sign: complex = 1) -> "PauliOperator":
    "Constructs a Pauli from its X and Z bit vectors (Y where both are set)."
    P = stim.PauliString.from_numpy(xs = np.asarray(xs, dtype = bool), zs = np.asarray(zs, dtype = bool))
    return cls(P, sign)

  @classmethod
  def on(cls, n: int, letter: str, support: Iterable[int]) -> "PauliOperator":
    "Pauli `letter` on every qubit in `support` (0-indexed), identity elsewhere."
    L = ["I"]*n
    for q in support: L[q] = letter
    return cls("".join(L))

  @property
  def n_qubits(self) -> int: return len(self.P)
  @property
  def sign(self) -> complex: return self.P.sign
  @property
  def weight(self) -> int: return self.P.weight
  @property
  def letters(self) -> str: return "".join("_XYZ"[self.P[i]] for i in range(len(self.P))).replace("_", "I")

  def bits(self) -> tuple[np.ndarray, np.ndarray]:
    "X and Z bit vectors of this Pauli as numpy boolean arrays."
    return self.P.to_numpy()

  def commutes(self, other: "PauliOperator") -> bool: return self.P.commutes(other.P)

  def __mul__(self, other: "PauliOperator") -> "PauliOperator":
    if self.n_qubits != other.n_qubits:
      raise ValueError(f"Cannot multiply Paulis on {self.n_qubits} and {other.n_qubits} qubits!")
    return PauliOperator(self.P*other.P)
  def __neg__(self) -> "PauliOperator": return PauliOperator(self.P, -1)
  def __eq__(self, other) -> bool: return isinstance(other, PauliOperator) and self.P == other.P
  def __hash__(self) -> int: return hash(str(self.P))
  def __str__(self) -> str: return str(self.P)
  def __repr__(self) -> str: return f"PauliOperator({str(self.P)})"

  def unsigned(self) -> "PauliOperator":
    P = self.P.copy()
    P.sign = 1
    return PauliOperator(P)

@dataclasses.dataclass(frozen = True)
class CircuitLocation:
  """
  A single location of a circuit. `classical_control` is a tuple of earlier measurement-record
  indices whose parity decides whether a (Pauli) gate fires.
  """
  kind: Kind
  targets: tuple
  fault_site_id: int = -1
  classical_control: tuple = None

  def __post_init__(self):
    object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
    if len(self.targets) != self.kind.arity:
      raise ValueError(f"Location {self.kind.name} takes {self.kind.arity} target(s), got {len(self.targets)}!")
    if self.kind is Kind.CNOT and self.targets[0] == self.targets[1]:
      raise ValueError("CNOT control and target must be distinct!")
    if self.classical_control is not None:
      if not self.kind.is_pauli:
        raise ValueError(f"Classical control only attaches to Pauli gates, not {self.kind.name}!")
      object.__setattr__(self, "classical_control", tuple(int(i) for i in self.classical_control))

  def __str__(self) -> str:
    s = f"{self.kind.name.lower()} {' '.join(map(str, self.targets))} #{self.fault_site_id}"
    if self.classical_control is not None: s += " if " + " ".join(map(str, self.classical_control))
    return s

@dataclasses.dataclass
class ShotRecord:
  measurement_bits: tuple
  classical_registers: dict = dataclasses.field(default_factory = dict)

  def __getitem__(self, i: int) -> int: return self.measurement_bits[i]
  def __len__(self) -> int: return len(self.measurement_bits)

def conjugate_pauli(kind: Kind, pauli: PauliOperator, targets: Sequence[int] = None) -> PauliOperator:
  """
  Returns g·P·g† for the unitary location kind `g`. If `targets` is None, `pauli` must act on
  exactly the gate's qubits; otherwise the gate acts on `targets` of a wider Pauli.
  """
  if not kind.is_unitary: raise ValueError(f"Cannot conjugate by non-unitary location {kind.name}!")
  T = stim.Tableau.from_named_gate(kind.value)
  if targets is None:
    if pauli.n_qubits != kind.arity:
      raise ValueError(f"{kind.name} acts on {kind.arity} qubit(s), Pauli has {pauli.n_qubits}!")
    return PauliOperator(T(pauli.P))
  return PauliOperator(pauli.P.after(T, targets = list(targets)))

def _apply_pauli(sim: stim.TableauSimulator, P: PauliOperator, targets: tuple):
  for i, q in enumerate(targets):
    l = P.P[i]
    if l != 0: sim.do(stim.CircuitInstruction("_XYZ"[l], [q]))

def run_shot(circuit: Sequence[CircuitLocation], faults: dict = None, seed: int = 0,
             registers: dict = None) -> ShotRecord:
  """
  Samples one shot of `circuit` exactly with a stabilizer tableau. `faults` maps fault site ids to
  Paulis on the location's targets, applied after preparations and gates and before measurements.
  `registers` optionally names parities (tuples of record indices) to evaluate at the end.
  """
  faults = {} if faults is None else faults
  sim = stim.TableauSimulator(seed = seed)
  n_meas = 0
  for loc in circuit:
    F = faults.get(loc.fault_site_id)
    if F is not None and F.n_qubits != len(loc.targets):
      raise ValueError(f"Fault at site {loc.fault_site_id} acts on {F.n_qubits} qubits, location on {len(loc.targets)}!")
    if loc.kind.is_measurement:
      if F is not None: _apply_pauli(sim, F, loc.targets)
      sim.do(stim.CircuitInstruction(loc.kind.value, list(loc.targets)))
      n_meas += 1
      continue
    if loc.classical_control is not None:
      if any(i >= n_meas or i < 0 for i in loc.classical_control):
        raise ValueError(f"Classical control {loc.classical_control} refers to a bit not yet produced!")
      rec = sim.current_measurement_record()
      fire = sum(rec[i] for i in loc.classical_control) % 2 == 1
      if fire and loc.kind is not Kind.I: sim.do(stim.CircuitInstruction(loc.kind.value, list(loc.targets)))
    elif loc.kind is not Kind.I:
      sim.do(stim.CircuitInstruction(loc.kind.value, list(loc.targets)))
    if F is not None: _apply_pauli(sim, F, loc.targets)
  bits = tuple(int(b) for b in sim.current_measurement_record())
  regs = {} if registers is None else {k: sum(bits[i] for i in v) % 2 for k, v in registers.items()}
  return ShotRecord(bits, regs)

def to_stim(circuit: Sequence[CircuitLocation], annotate = None) -> stim.Circuit:
  """
  Exports a flat location list to a `stim.Circuit`. Classically controlled Paulis become feedback
  instructions on `rec[-k]`. `annotate(loc)` may return a list of (name, arg, targets) noise
  instructions, which are placed before measurements and after everything else.
  """
  C = stim.Circuit()
  n_meas = 0
  for loc in circuit:
    noise = [] if annotate is None else annotate(loc)
    if loc.kind.is_measurement:
      for name, p, T in noise: C.append(name, T, p)
      C.append(loc.kind.value, list(loc.targets))
      n_meas += 1
      continue
    if loc.classical_control is not None:
      if loc.kind is not Kind.I:
        for i in loc.classical_control:
          C.append("C" + loc.kind.value, [stim.target_rec(i - n_meas), loc.targets[0]])
    else: C.append(loc.kind.value, list(loc.targets))
    for name, p, T in noise: C.append(name, T, p)
  return C
