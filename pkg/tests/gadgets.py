import unittest, dataclasses, itertools

from .utils import FtlabTest
from ftlab.engine import Kind, PauliOperator
from ftlab.codes import steane_code, hamming_code
from ftlab.noise import NoiseParams
from ftlab.decoders import E
from ftlab.gadgets import tower_for, Builder, BenchmarkSpec, build_cnot_benchmark, build_prep, build_bell_prep, \
  build_knill_ec, build_star_u, build_transversal, program_for, dump, parse_dump
from ftlab.estimator import run_benchmark
import numpy as np

def flagged(S) -> np.ndarray:
  F = np.zeros(S.shots, dtype = bool)
  for v in S.failed.values(): F |= v > 0
  return F

def single_faults(kind) -> list:
  if kind.arity == 1: return [PauliOperator(a) for a in "XYZ"]
  return [PauliOperator(a + b) for a, b in itertools.product("IXYZ", repeat = 2) if a + b != "II"]

def uncaught(c, bad) -> list:
  "Single faults of `c` that leave some unflagged shot with `bad(R)` set."
  U = []
  for loc in c.locations:
    for P in single_faults(loc.kind):
      R = c.run(4, seed = loc.fault_site_id, inject = {loc.fault_site_id: P})
      if (bad(R) & ~flagged(R)).any(): U.append(f"{P} at {loc}")
  return U

class TestGadgets(FtlabTest):
  def test_towers(self):
    self.assertEqual(tower_for("c4c6", 3).N(), 36)
    self.assertEqual(tower_for("c4steane", 2).N(), 28)
    self.assertEqual(tower_for("steane", 2).K(), 1)
    self.assertEqual(tower_for("hamming", 1, 5).K(), 21)
    with self.assertRaises(KeyError): tower_for("golay", 1)
    with self.assertRaises(ValueError): tower_for("hamming", 2, 4)
    with self.assertRaises(ValueError): tower_for("hamming", 1)
    with self.assertRaises(ValueError): tower_for("steane", 0)
    with self.assertRaises(ValueError): Builder(tower_for("steane", 1), "steane", idle_policy = "sometimes")

  def test_benchmark_spec(self):
    with self.assertRaises(ValueError): BenchmarkSpec("steane", 1, variant = "simplified")
    with self.assertRaises(ValueError): BenchmarkSpec("c4c6", 2, variant = "simplified")
    with self.assertRaises(ValueError): BenchmarkSpec("steane", 1, r_next = 4)
    with self.assertRaises(ValueError): BenchmarkSpec("hamming", 1, r = 5, r_next = 4)
    with self.assertRaises(ValueError): BenchmarkSpec("hamming", 1, r = 5, shots = -1)
    self.assertEqual(BenchmarkSpec("steane", 2, variant = "simplified").rounds, 1)
    self.assertEqual(BenchmarkSpec("c4c6", 1).rounds, 10)
    self.assertFalse(BenchmarkSpec("hamming", 1, r = 3).rerun)
    self.assertFalse(BenchmarkSpec("c4steane", 1).rerun)
    self.assertEqual(BenchmarkSpec("hamming", 1, r = 4).code, "Q4")

  def test_noiseless_benchmarks(self):
    for S in (BenchmarkSpec("c4c6", 1), BenchmarkSpec("steane", 1), BenchmarkSpec("steane", 1, prep = "conventional"),
              BenchmarkSpec("c4steane", 1), BenchmarkSpec("hamming", 1, r = 3), BenchmarkSpec("hamming", 1, r = 4)):
      S = dataclasses.replace(S, shots = 10**5)
      T = run_benchmark(S, batch = 2**14, progress = False)
      self.assertEqual((T.shots_total, T.passed), (10**5, 10**5), msg = f"{S.code} {S.prep}")
      self.assertFalse(T.passed_failures.any(), msg = f"{S.code} {S.prep}")
    for S in (BenchmarkSpec("c4c6", 2), BenchmarkSpec("steane", 2, variant = "simplified")):
      c = build_cnot_benchmark(S)
      R = c.run(256)
      self.assertEqual(R.regs["fail"].shape, (256, c.tower.K()))
      self.assertFalse(R.regs["fail"].any(), msg = f"{S.code} L{S.level}")
      self.assertFalse(flagged(R).any(), msg = f"{S.code} L{S.level}")

  def test_noiseless_preparations(self):
    for code, level in (("C4", 1), ("C6", 2), ("C6", 3), ("Steane", 1), ("Steane", 2), ("Q4", 1), ("Q5", 1)):
      for state, basis in (("zero", "Z"), ("plus", "X")):
        R = build_prep(code, state, level = level, readout = basis).run(8)
        self.assertFalse(R.regs["out"].any(), msg = f"{code} L{level} {state}")
    R = build_prep("Steane", "zero", variant = "conventional", readout = "Z").run(8)
    self.assertFalse(R.regs["out"].any())

  def test_bell_pairs(self):
    for code, level in (("C4", 1), ("C6", 2), ("Steane", 1), ("Q4", 1)):
      for basis in "ZX":
        R = build_bell_prep(code, level = level, readout = basis).run(32, seed = 3)
        a, b = R.regs["a"], R.regs["b"]
        self.assertFalse((a == E).any())
        self.assertTrue(np.array_equal(a, b), msg = f"{code} {basis}")
    R = build_bell_prep("Steane", readout = "Z").run(64, seed = 5)
    self.assertEqual(set(R.regs["a"][:, 0].tolist()), {0, 1})

  def test_instance_counts(self):
    c = build_prep("Steane")
    self.assertEqual(c.instances, {"L1.Steane.zero": 1})
    c = build_knill_ec("Steane")
    self.assertEqual(c.instances, {"L1.Steane.zero": 1, "L1.Steane.plus": 1})
    self.assertIn("verify Steane.zero.goto", c.frame_corrections)
    self.assertIn("teleport L1 ec", c.frame_corrections)

  def test_steane_ec_single_faults(self):
    for state, basis in (("zero", "Z"), ("plus", "X")):
      c = build_knill_ec("Steane", state = state, readout = basis, rerun = False)
      self.assertEqual(len(c.meta["entry_sites"]), 7)
      for loc in c.locations:
        for P in single_faults(loc.kind):
          R = c.run(8, seed = loc.fault_site_id, inject = {loc.fault_site_id: P})
          ok = ~flagged(R)
          self.assertFalse(R.regs["out"][ok].any(), msg = f"{state}: {P} at {loc}")

  def test_c4_single_faults(self):
    for state, basis in (("zero", "Z"), ("plus", "X")):
      c = build_prep("C4", state, readout = basis)
      self.assertEqual(uncaught(c, lambda R: (R.regs["out"] == 1).any(1)), [], msg = state)
      # A single fault in error detection is caught, or leaves a detectable error on the output.
      c = build_knill_ec("C4", state = state, readout = basis, mode = "ed")
      self.assertIn("L1.C4.ed", c.instances)
      self.assertEqual(uncaught(c, lambda R: (R.regs["out"] == 1).any(1)), [], msg = state)

  def test_c4_bell_detection(self):
    c = build_bell_prep("C4", readout = "Z")
    site = next(loc for loc in c.locations if loc.kind is Kind.I)
    R = c.run(16, inject = {site.fault_site_id: PauliOperator("X")})
    self.assertEqual(R.counters["L1.C4.bell"].tolist(), [16, 16, 16, 0])
    self.assertFalse(flagged(R).any())
    R = c.run(16)
    self.assertEqual(R.counters["L1.C4.bell"].tolist(), [16, 0, 0, 0])

  def test_hamming_prep_single_faults(self):
    for state, basis in (("zero", "Z"), ("plus", "X")):
      c = build_prep("Q3", state, readout = basis)
      self.assertEqual(uncaught(c, lambda R: R.regs["out"].astype(bool).any(1)), [], msg = state)

  def test_conventional_prep(self):
    P = program_for(steane_code(), "zero", "conventional")
    V = np.eye(7, dtype = np.uint8).reshape(7, 7, 1)
    self.assertEqual(P.check({"c": V}).tolist(), [True, True, True, False, True, True, True])
    self.assertFalse(P.check({"c": np.zeros((1, 7, 1), dtype = np.uint8)}).any())
    self.assertTrue(program_for(hamming_code(3), "zero").check({"c": V}).all())
    for state, basis in (("zero", "Z"), ("plus", "X")):
      c = build_prep("Steane", state, variant = "conventional", readout = basis)
      self.assertEqual(uncaught(c, lambda R: R.regs["out"].astype(bool).any(1)), [], msg = state)

  def test_hamming_ec_entry_faults(self):
    c = build_knill_ec("Q4", readout = "Z", rerun = False)
    for s in c.meta["entry_sites"]:
      for P in single_faults(c.locations[0].kind):
        R = c.run(4, inject = {s: P})
        self.assertFalse(R.regs["out"][~flagged(R)].any(), msg = f"{P} at {s}")

  def test_ec_bell_reference(self):
    R = build_knill_ec("Steane", state = "bell", readout = "Z", repeat = 2).run(32, seed = 1)
    self.assertTrue(np.array_equal(R.regs["out"], R.regs["ref"]))

  def test_star_u(self):
    for level in (1, 2):
      maps = {}
      for variant in ("u", "u2"):
        for a in itertools.product((0, 1), repeat = 2):
          R = build_star_u(variant, level, a).run(4, seed = 2)
          o = R.regs["out"]
          self.assertFalse((o == E).any())
          self.assertTrue((o == o[0]).all())
          maps[variant, a] = tuple(int(x) for x in o[0])
      u = {a: maps["u", a] for a in itertools.product((0, 1), repeat = 2)}
      self.assertEqual(sorted(u.values()), sorted(u))
      self.assertEqual(u[0, 0], (0, 0))
      for a in u:
        self.assertEqual(maps["u2", a], u[u[a]])
        self.assertEqual(u[u[u[a]]], a)
      self.assertNotEqual(u[1, 0], (1, 0))
    with self.assertRaises(ValueError): build_star_u("u3")

  def test_transversal(self):
    for code, level, K in (("C4", 1, 2), ("C6", 2, 2), ("Steane", 1, 1), ("Steane", 2, 1), ("Q4", 1, 7)):
      for bits in itertools.islice(itertools.product((0, 1), repeat = K), 1, 4):
        R = build_transversal("cnot", code, level = level, logical = bits).run(4)
        self.assertTrue((R.regs["a"] == bits).all(), msg = f"{code} {bits}")
        self.assertTrue((R.regs["b"] == bits).all(), msg = f"{code} {bits}")
        R = build_transversal("pauli", code, level = level, logical = bits).run(4)
        self.assertTrue((R.regs["out"] == bits).all(), msg = f"{code} {bits}")
      for kind in ("measure_Z", "measure_X"):
        R = build_transversal(kind, code, level = level).run(4)
        self.assertFalse(R.regs["out"].any(), msg = f"{code} {kind}")
    with self.assertRaises(ValueError): build_transversal("toffoli", "C4")
    with self.assertRaises(ValueError): build_transversal("pauli", "C4", logical = (1,))

  def test_noisy_prep_flags(self):
    c = build_prep("Steane", readout = "Z", rerun = False)
    R = c.run(2000, NoiseParams(0.05, 0.05), seed = 11)
    self.assertGreater(flagged(R).sum(), 0)
    self.assertEqual(R.counters["L1.Steane.zero"][2], 0)
    c = build_prep("Steane", readout = "Z", rerun = True)
    R = c.run(2000, NoiseParams(0.05, 0.05), seed = 11)
    self.assertGreater(R.counters["L1.Steane.zero"][2], 0)
    self.assertLess(flagged(R).sum(), R.counters["L1.Steane.zero"][1])

  def test_dump_round_trip(self):
    c = build_prep("Steane", "zero")
    T = dump(c)
    self.assertIn("# check L1.Steane.zero", T)
    self.assertIn("# verify Steane.zero.goto", T)
    L = parse_dump(T)
    self.assertEqual([str(x) for x in L], [str(x) for x in c.locations])
    self.assertEqual(dump(L), "\n".join(str(x) for x in L) + "\n")
    c = build_knill_ec("C4")
    self.assertIn("# noiseless {", dump(c))
    self.assertEqual(len(parse_dump(dump(c))), len(c.locations))

if __name__ == "__main__":
  unittest.main()
