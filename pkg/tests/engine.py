import unittest, itertools

from .utils import FtlabTest
from ftlab.engine import Kind, PauliOperator, CircuitLocation, conjugate_pauli, run_shot, to_stim
import numpy as np

def loc(kind: Kind, *targets, site: int = -1, control: tuple = None) -> CircuitLocation:
  return CircuitLocation(kind, targets, site, control)

# Dense oracle for circuits on a handful of qubits; qubit 0 is the first tensor axis.
H = np.array([[1, 1], [1, -1]], dtype = complex)/np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype = complex)
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype = complex).reshape(2, 2, 2, 2)

def apply1(psi: np.ndarray, U: np.ndarray, q: int) -> np.ndarray:
  return np.moveaxis(np.tensordot(U, psi, axes = ([1], [q])), 0, q)

def apply_cx(psi: np.ndarray, c: int, t: int) -> np.ndarray:
  psi = np.tensordot(CX, psi, axes = ([2, 3], [c, t]))
  return np.moveaxis(psi, [0, 1], [c, t])

def prob_one(psi: np.ndarray, q: int) -> float:
  return float(np.sum(np.abs(np.take(psi, 1, axis = q))**2))

class TestEngine(FtlabTest):
  def test_conjugation_examples(self):
    self.assertEqual(conjugate_pauli(Kind.H, PauliOperator("X")), PauliOperator("Z"))
    self.assertEqual(conjugate_pauli(Kind.CNOT, PauliOperator("XI")), PauliOperator("XX"))
    self.assertEqual(conjugate_pauli(Kind.CNOT, PauliOperator("IZ")), PauliOperator("ZZ"))
    self.assertEqual(conjugate_pauli(Kind.S, PauliOperator("X")), PauliOperator("Y"))
    self.assertEqual(conjugate_pauli(Kind.H, PauliOperator("Y")), -PauliOperator("Y"))

  def test_conjugation_is_group_action(self):
    for k in (Kind.I, Kind.X, Kind.Y, Kind.Z, Kind.H, Kind.S, Kind.CNOT):
      for a, b in itertools.product(itertools.product("IXYZ", repeat = k.arity), repeat = 2):
        P, Q = PauliOperator("".join(a)), PauliOperator("".join(b))
        self.assertEqual(conjugate_pauli(k, P*Q), conjugate_pauli(k, P)*conjugate_pauli(k, Q),
                         msg = f"{k.name}: {P} {Q}")

  def test_conjugation_rejects_non_unitary(self):
    for k in (Kind.PREP_0, Kind.PREP_PLUS, Kind.MEASURE_Z, Kind.MEASURE_X):
      with self.assertRaises(ValueError): conjugate_pauli(k, PauliOperator("X"))

  def test_pauli_products(self):
    for a in itertools.product("IXYZ", repeat = 2):
      P = PauliOperator("".join(a))
      Q = P*P
      self.assertEqual(Q.weight, 0)
      self.assertIn(Q.sign, (1, -1))
    XZ = PauliOperator("X")*PauliOperator("Z")
    self.assertEqual(XZ.unsigned(), PauliOperator("Y"))
    self.assertEqual(XZ.sign, -1j)
    self.assertEqual(PauliOperator("XIZY").weight, 3)
    self.assertEqual(PauliOperator.identity(5).weight, 0)

  def test_pauli_bits(self):
    P = PauliOperator.from_bits([1, 0, 1], [0, 1, 1])
    self.assertEqual(P.letters, "XZY")
    xs, zs = P.bits()
    self.assertTrue(np.array_equal(xs, [True, False, True]))
    self.assertTrue(np.array_equal(zs, [False, True, True]))
    self.assertEqual(PauliOperator.on(4, "Z", [1, 3]).letters, "IZIZ")
    self.assertFalse(PauliOperator("XI").commutes(PauliOperator("ZI")))
    self.assertTrue(PauliOperator("XX").commutes(PauliOperator("ZZ")))

  def test_location_contracts(self):
    with self.assertRaises(ValueError): loc(Kind.CNOT, 0)
    with self.assertRaises(ValueError): loc(Kind.CNOT, 1, 1)
    with self.assertRaises(ValueError): loc(Kind.H, 0, 1)
    with self.assertRaises(ValueError): loc(Kind.H, 0, control = (0,))
    self.assertEqual(str(loc(Kind.CNOT, 0, 1, site = 5)), "cnot 0 1 #5")
    self.assertEqual(str(loc(Kind.X, 2, site = 9, control = (0, 1))), "x 2 #9 if 0 1")
    self.assertIs(Kind.parse("prep_plus"), Kind.PREP_PLUS)
    self.assertIs(Kind.parse("CX"), Kind.CNOT)
    with self.assertRaises(KeyError): Kind.parse("toffoli")

  def test_trivial_shots(self):
    self.assertEqual(run_shot([loc(Kind.PREP_0, 0), loc(Kind.MEASURE_Z, 0)]).measurement_bits, (0,))
    C = [loc(Kind.PREP_PLUS, 0, site = 0), loc(Kind.MEASURE_X, 0, site = 1)]
    self.assertEqual(run_shot(C).measurement_bits, (0,))
    self.assertEqual(run_shot(C, {0: PauliOperator("Z")}).measurement_bits, (1,))
    self.assertEqual(run_shot(C, {1: PauliOperator("Z")}).measurement_bits, (1,))
    self.assertEqual(run_shot(C, {1: PauliOperator("X")}).measurement_bits, (0,))

  def test_bell_correlations(self):
    C = [loc(Kind.PREP_PLUS, 0), loc(Kind.PREP_0, 1), loc(Kind.CNOT, 0, 1), loc(Kind.MEASURE_Z, 0),
         loc(Kind.MEASURE_Z, 1)]
    B = [run_shot(C, seed = s).measurement_bits for s in range(64)]
    for b in B: self.assertEqual(b[0], b[1])
    self.assertEqual({b[0] for b in B}, {0, 1})

  def test_determinism(self):
    C = [loc(Kind.PREP_PLUS, q) for q in range(4)] + [loc(Kind.MEASURE_Z, q) for q in range(4)]
    for s in range(8): self.assertEqual(run_shot(C, seed = s), run_shot(C, seed = s))

  def test_classical_control(self):
    C = [loc(Kind.PREP_0, 0), loc(Kind.X, 0), loc(Kind.MEASURE_Z, 0), loc(Kind.PREP_0, 1),
         loc(Kind.X, 1, control = (0,)), loc(Kind.MEASURE_Z, 1)]
    R = run_shot(C, registers = {"both": (0, 1)})
    self.assertEqual(R.measurement_bits, (1, 1))
    self.assertEqual(R.classical_registers["both"], 0)
    with self.assertRaises(ValueError): run_shot([loc(Kind.PREP_0, 0), loc(Kind.X, 0, control = (0,))])

  def test_fault_width_mismatch(self):
    with self.assertRaises(ValueError): run_shot([loc(Kind.PREP_0, 0, site = 0)], {0: PauliOperator("XX")})

  def test_statevector_oracle(self):
    rng = np.random.default_rng(7)
    for trial in range(40):
      n = int(rng.integers(2, 5))
      psi = np.zeros((2,)*n, dtype = complex)
      psi[(0,)*n] = 1
      C = [loc(Kind.PREP_0, q) for q in range(n)]
      for _ in range(int(rng.integers(1, 12))):
        g = int(rng.integers(3))
        if g == 2:
          c, t = rng.choice(n, 2, replace = False)
          psi = apply_cx(psi, int(c), int(t))
          C.append(loc(Kind.CNOT, int(c), int(t)))
        else:
          q = int(rng.integers(n))
          psi = apply1(psi, H if g == 0 else S, q)
          C.append(loc(Kind.H if g == 0 else Kind.S, q))
      q = int(rng.integers(n))
      p1 = prob_one(psi, q)
      B = {run_shot(C + [loc(Kind.MEASURE_Z, q)], seed = s).measurement_bits[0] for s in range(24)}
      if p1 < 1e-9: self.assertEqual(B, {0}, msg = f"trial {trial}")
      elif p1 > 1 - 1e-9: self.assertEqual(B, {1}, msg = f"trial {trial}")
      else:
        self.assertAlmostEqual(p1, 0.5)
        self.assertEqual(B, {0, 1}, msg = f"trial {trial}")

  def test_stim_export(self):
    C = [loc(Kind.PREP_PLUS, 0), loc(Kind.PREP_0, 1), loc(Kind.CNOT, 0, 1), loc(Kind.MEASURE_Z, 0),
         loc(Kind.X, 1, control = (0,)), loc(Kind.MEASURE_Z, 1)]
    T = to_stim(C)
    self.assertEqual(T.num_measurements, 2)
    self.assertEqual(T.num_qubits, 2)
    s = T.compile_sampler().sample(32)
    self.assertTrue(np.all(s[:, 1] == 0))

if __name__ == "__main__":
  unittest.main()
