import unittest, hashlib, itertools

from .utils import FtlabTest
from ftlab.engine import Kind, CircuitLocation, run_shot
from ftlab.codes import rank, inverse, nullspace, in_span, hamming_matrix, hamming_code, steane_code, c4_code, \
  c6_code, code_by_name, derive_logical_operators, RegisterIndex, chain_register_layout, load_latin, \
  latin_rectangle_circuit, latin_moments, LATIN_PATH, Tower, C4_STAR_U
from ftlab.planner import table1_chain
import numpy as np

class TestCodes(FtlabTest):
  def test_gf2(self):
    M = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    self.assertEqual(rank(M), 2)
    self.assertTrue(in_span(M, [1, 0, 1]))
    self.assertFalse(in_span(M, [1, 0, 0]))
    N = nullspace(M)
    self.assertFalse((M @ N.T % 2).any())
    A = np.array([[1, 1], [0, 1]])
    self.assertTrue(np.array_equal(A @ inverse(A) % 2, np.eye(2)))
    with self.assertRaises(ValueError): inverse(np.array([[1, 1], [1, 1]]))

  def test_hamming_family(self):
    for r in range(3, 9):
      Q = hamming_code(r)
      self.assertEqual((Q.n, Q.k, Q.d), (2**r - 1, 2**r - 1 - 2*r, 3))
      self.assertEqual(rank(Q.hx), r)
      self.assertFalse((Q.lx.astype(int) @ Q.hz.T % 2).any())
    self.assertTrue(np.array_equal(hamming_matrix(3)[:, 4], [1, 0, 1]))
    with self.assertRaises(ValueError): hamming_code(9)
    with self.assertRaises(ValueError): hamming_code(2)
    with self.assertRaises(TypeError): hamming_code("3")
    self.assertEqual(hamming_code(3).k, 1)
    self.assertTrue(np.array_equal(steane_code().lz, [[1, 1, 1, 0, 0, 0, 0]]))

  def test_small_codes(self):
    C4, C6 = c4_code(), c6_code()
    self.assertEqual((C4.n, C4.k, C6.n, C6.k), (4, 2, 6, 2))
    self.assertIs(code_by_name("C6"), C6)
    self.assertIs(code_by_name("q5"), hamming_code(5))
    with self.assertRaises(KeyError): code_by_name("golay")
    # ∗u is a cyclic permutation of C₄ qubits of order three.
    self.assertTrue(np.array_equal(C4_STAR_U[C4_STAR_U[C4_STAR_U]], np.arange(4)))

  def test_derived_logicals(self):
    H = hamming_matrix(4)
    lx, lz = derive_logical_operators(H, H)
    self.assertEqual(len(lx), 7)
    self.assertTrue(np.array_equal(lx.astype(int) @ lz.T % 2, np.eye(7, dtype = int)))
    with self.assertRaises(ValueError): derive_logical_operators(np.array([[1, 0]]), np.array([[1, 1]]))

  def test_syndrome_and_values(self):
    S = steane_code()
    e = np.zeros(7, dtype = int)
    e[4] = 1
    s = S.syndrome(e, "Z")
    self.assertEqual(int(s[0] + 2*s[1] + 4*s[2]), 5)
    self.assertEqual(int(S.values(np.ones(7, dtype = int), "Z")[0]), 1)

  def test_register_index(self):
    R = RegisterIndex(1, 2, 21)
    self.assertEqual(R.K, 42)
    for i in range(1, R.K + 1): self.assertEqual(R.index(*R.pair(i)), i)
    self.assertEqual(R.index(1, 2), 2)
    self.assertEqual(R.index(2, 1), 3)
    with self.assertRaises(ValueError): R.index(22, 1)
    R = RegisterIndex(2, 21, 51)
    self.assertEqual(R.index(1, 21), 21)
    self.assertEqual(R.pair(22), (2, 1))
    self.assertEqual(chain_register_layout(table1_chain())[1].pair(22), (1, 22))
    L = chain_register_layout(table1_chain())
    self.assertEqual([x.K for x in L], [2*21, 2*21*51, 2*21*51*113, 2*21*51*113**2])

  def test_latin_rectangles(self):
    R = load_latin()
    self.assertEqual(sorted(R), [3, 4, 5, 6, 7])
    for r, L in R.items():
      L.validate()
      self.assertEqual(L.missing(), [])
      self.assertEqual(int((L.L > 0).sum()), sum(bin(j).count("1") for j in range(1, 2**r)) - r)

  def test_latin_data(self):
    with open(LATIN_PATH, "rb") as f:
      self.assertEqual(hashlib.sha256(f.read()).hexdigest(),
                       "142ec7d68c19761ab7159a913bee9f91bb617da92fce8b64eff266f4cf81b7ea")
    W = load_latin(complete = False)
    self.assertTrue(np.array_equal(W[3].L, [[0, 0, 2, 0, 1, 0, 0], [0, 0, 1, 0, 0, 3, 2], [0, 0, 0, 0, 2, 1, 0]]))
    self.assertEqual(W[3].missing(), [(0, 6), (2, 6)])
    for r in (4, 5, 6, 7): self.assertEqual(W[r].missing(), [])
    self.assertEqual(int((W[4].L > 0).sum()), 28)
    self.assertEqual(W[4].depth, 7)

  def test_latin_completion(self):
    W = load_latin(complete = False)[3]
    L = load_latin()[3]
    self.assertEqual(L.depth, 3)
    self.assertEqual(int((L.L > 0).sum()), 9)
    # The shipped first row keeps its layers.
    self.assertTrue(np.array_equal(L.L[0][W.L[0] > 0], W.L[0][W.L[0] > 0]))
    C = latin_rectangle_circuit(3, "zero")
    self.assertEqual(sum(c.kind is Kind.CNOT for c in C), 9)
    self.assertEqual(len(latin_moments(3, "zero")), 4)
    self.assertTrue(np.array_equal(load_latin()[4].L, load_latin(complete = False)[4].L))

  def test_hamming_distance(self):
    for r in range(3, 9):
      H = hamming_matrix(r).astype(int)
      n = H.shape[1]
      S = [tuple(H[:, i]) for i in range(n)]
      self.assertEqual(len(set(S)), n)
      self.assertNotIn((0,)*r, S)
    for r in (3, 4, 5):
      Q = hamming_code(r)
      for basis in ("X", "Z"):
        for i, j in itertools.combinations(range(Q.n), 2):
          e = np.zeros(Q.n, dtype = int)
          e[[i, j]] = 1
          self.assertTrue(Q.syndrome(e, basis).any(), msg = f"Q{r} {basis} {i} {j}")

  def test_latin_encoders(self):
    for r in (3, 4, 5):
      Q = hamming_code(r)
      for state, basis, M in (("zero", "Z", Kind.MEASURE_Z), ("plus", "X", Kind.MEASURE_X)):
        C = latin_rectangle_circuit(r, state)
        C += [CircuitLocation(M, (q,), len(C) + q) for q in range(Q.n)]
        for seed in range(4):
          b = np.array(run_shot(C, seed = seed).measurement_bits)
          self.assertFalse(Q.syndrome(b, basis).any(), msg = f"Q{r} {state}")
          self.assertFalse(Q.values(b, basis).any(), msg = f"Q{r} {state}")

  def test_towers(self):
    C4, C6, S = c4_code(), c6_code(), steane_code()
    T = Tower((C4, C6, C6), ("slice", "joint", "joint"))
    self.assertEqual([T.N(l) for l in range(1, 4)], [4, 12, 36])
    self.assertEqual([T.K(l) for l in range(1, 4)], [2, 2, 2])
    self.assertEqual(T.sub(2), 3)
    U = Tower((C4, S), ("slice", "slice"))
    self.assertEqual((U.N(), U.K()), (28, 2))
    self.assertEqual(Tower((S, S), ("slice", "slice")).N(), 49)
    with self.assertRaises(ValueError): Tower((C4, S), ("slice", "joint"))
    for l in range(1, 4):
      X, Z = T.supports(l, "X").astype(int), T.supports(l, "Z").astype(int)
      self.assertEqual(X.shape, (2, T.N(l)))
      self.assertTrue(np.array_equal(X @ Z.T % 2, np.eye(2, dtype = int)))

if __name__ == "__main__":
  unittest.main()
