"""
Monte Carlo estimation of logical CNOT error rates from the reference-entanglement benchmark.

Shots run in batches; batch b draws its randomness from `SeedSequence([seed, b])`, so a tally
depends only on the benchmark specification, the master seed and the batch size, never on the
order in which batches finish or on the number of worker threads.
"""
import concurrent.futures, dataclasses, functools, logging, math

import numpy as np
import pandas as pd
from tqdm import tqdm

from .frames import State
from .gadgets import BenchmarkSpec, GadgetCircuit, build_cnot_benchmark

log = logging.getLogger(__name__)

BATCH = 1024
ACCOUNTINGS = ("postselect_only", "leading_order")

def _zeros(K: int) -> np.ndarray: return np.zeros(K, dtype = np.int64)

@dataclasses.dataclass
class ShotTally:
  """
  Shot counts of a benchmark run. Each shot falls into exactly one verification outcome class:
  all verifications passed (`passed`), exactly one verification failed, of class i (`single[i]`),
  or anything else (`other`). For every class the number of shots and, per logical qubit, the
  number of shots whose final Bell parities were not all zero are kept. `verification[cls]`
  holds (attempts, failures, reruns, exhausted) of every verification class.
  """
  K: int
  rounds: int
  shots_total: int = 0
  passed: int = 0
  passed_failures: np.ndarray = None
  single: dict = dataclasses.field(default_factory = dict)
  single_failures: dict = dataclasses.field(default_factory = dict)
  other: int = 0
  other_failures: np.ndarray = None
  verification: dict = dataclasses.field(default_factory = dict)

  def __post_init__(self):
    if self.passed_failures is None: self.passed_failures = _zeros(self.K)
    if self.other_failures is None: self.other_failures = _zeros(self.K)

  @classmethod
  def from_state(cls, S: State, rounds: int) -> "ShotTally":
    "Classifies the shots of an executed benchmark batch."
    F = S.regs["fail"]
    T = cls(F.shape[1], rounds, S.shots)
    C = sorted(S.failed)
    n = np.zeros(S.shots, dtype = np.int64)
    for c in C: n += S.failed[c]
    ok = n == 0
    T.passed, T.passed_failures = int(ok.sum()), F[ok].sum(0).astype(np.int64)
    for c in C:
      m = (n == 1) & (S.failed[c] == 1)
      if not m.any(): continue
      T.single[c], T.single_failures[c] = int(m.sum()), F[m].sum(0).astype(np.int64)
    o = n > 1
    T.other, T.other_failures = int(o.sum()), F[o].sum(0).astype(np.int64)
    T.verification = {c: S.counters[c].copy() for c in S.counters}
    return T

  def merge(self, other: "ShotTally") -> "ShotTally":
    if (self.K, self.rounds) != (other.K, other.rounds):
      raise ValueError(f"Cannot merge tallies of shape (K={self.K}, rounds={self.rounds}) and "
                       f"(K={other.K}, rounds={other.rounds})!")
    T = ShotTally(self.K, self.rounds, self.shots_total + other.shots_total, self.passed + other.passed,
                  self.passed_failures + other.passed_failures, other = self.other + other.other,
                  other_failures = self.other_failures + other.other_failures)
    for c in set(self.single) | set(other.single):
      T.single[c] = self.single.get(c, 0) + other.single.get(c, 0)
      T.single_failures[c] = self.single_failures.get(c, _zeros(self.K)) + other.single_failures.get(c, _zeros(self.K))
    for c in set(self.verification) | set(other.verification):
      T.verification[c] = self.verification.get(c, np.zeros(4, dtype = np.int64)) + \
                          other.verification.get(c, np.zeros(4, dtype = np.int64))
    return T

  __add__ = merge

  def check(self):
    "Raises if the outcome classes do not partition the shots."
    n = self.passed + sum(self.single.values()) + self.other
    if n != self.shots_total: raise ValueError(f"Outcome classes cover {n} of {self.shots_total} shots!")

  @property
  def classes(self) -> list: return sorted(set(self.single) | set(self.verification))

  def verification_rate(self, cls: str = None) -> float:
    "Fraction of shots with exactly one failed verification (of class `cls`), or with any, if `cls` is None."
    if self.shots_total == 0: return math.nan
    if cls is None: return (self.shots_total - self.passed)/self.shots_total
    return self.single.get(cls, 0)/self.shots_total

  def to_dict(self) -> dict:
    return {"K": self.K, "rounds": self.rounds, "shots_total": self.shots_total,
            "passed": self.passed, "passed_failures": self.passed_failures.tolist(),
            "single": dict(sorted(self.single.items())),
            "single_failures": {c: v.tolist() for c, v in sorted(self.single_failures.items())},
            "other": self.other, "other_failures": self.other_failures.tolist(),
            "verification": {c: dict(zip(("attempts", "failures", "reruns", "exhausted"), map(int, v)))
                             for c, v in sorted(self.verification.items())}}

  def __eq__(self, other) -> bool: return isinstance(other, ShotTally) and self.to_dict() == other.to_dict()

@dataclasses.dataclass(frozen = True)
class RateEstimate:
  """
  A logical CNOT error rate per round and per logical qubit. `sigma_log10` is NaN when it is
  undefined (no failures); `defined` is False when no shot qualified for the estimate.
  """
  p_L: float
  sigma_log10: float
  failures: int
  trials: int
  accounting: str = "postselect_only"
  defined: bool = True

  @property
  def flagged(self) -> bool: return not self.defined or math.isnan(self.sigma_log10)

def sigma_log10(failures: int, trials: int) -> float:
  """
  Standard deviation of log₁₀ p̂ for a binomial estimate p̂ = failures/trials, propagated from
  σ_p = sqrt(p̂(1−p̂)/trials). NaN when there are no failures.
  """
  if trials <= 0: raise ValueError(f"Trial count must be positive, got {trials}!")
  if failures < 0 or failures > trials: raise ValueError(f"Failure count must be in 0..{trials}, got {failures}!")
  if failures == 0: return math.nan
  p = failures/trials
  return math.sqrt(p*(1 - p)/trials)/(p*math.log(10))

def leading_order_rate(p0: float, p_ver, p_classes) -> float:
  """
  P_L = P⁰ + P_ver·Σᵢ Pⁱ. With a scalar `p_ver` this is the aggregate reading; with one
  verification rate per class, each class is weighted by its own rate: P⁰ + Σᵢ P_verⁱ·Pⁱ.
  """
  P = np.asarray(p_classes, dtype = np.float64)
  V = np.asarray(p_ver, dtype = np.float64)
  if V.ndim > 0 and V.shape != P.shape: raise ValueError(f"Expected {len(P)} verification rates, got {len(V)}!")
  return float(p0 + (V*P.sum() if V.ndim == 0 else (V*P).sum()))

def _rate(failures: np.ndarray, shots: int, rounds: int) -> float:
  return float(failures.sum())/(shots*len(failures)*rounds)

def logical_cnot_rate(tally: ShotTally, accounting: str = "postselect_only", verification: ShotTally = None,
                      reading: str = "aggregate") -> RateEstimate:
  """
  Logical CNOT error rate per round, averaged over the K logical qubits.

  * `postselect_only`: failures among shots where every verification passed, divided by those
    shots and by the number of rounds.
  * `leading_order`: the all-pass rate plus the leading-order contribution of shots with a
    single failed verification. Rates of verification failures and of the per-class logical
    errors come from `verification` (a smaller run) when given, else from `tally` itself;
    `reading` selects the aggregate or per-class weighting (see `leading_order_rate`).
  """
  if accounting not in ACCOUNTINGS: raise ValueError(f"Unknown accounting {accounting}!")
  if tally.passed == 0:
    log.warning("No shot passed every verification; the logical error rate is undefined.")
    return RateEstimate(math.nan, math.nan, 0, 0, accounting, False)
  R, K = tally.rounds, tally.K
  f0, n0 = int(tally.passed_failures.sum()), tally.passed*K
  p0 = _rate(tally.passed_failures, tally.passed, R)
  if accounting == "postselect_only": return RateEstimate(p0, sigma_log10(f0, n0), f0, n0, accounting)
  if reading not in ("aggregate", "per_class"): raise ValueError(f"Unknown reading {reading}!")
  V = tally if verification is None else verification
  C = sorted(c for c in V.single if V.single[c] > 0)
  P = [_rate(V.single_failures[c], V.single[c], R) for c in C]
  pv = V.verification_rate() if reading == "aggregate" else [V.verification_rate(c) for c in C]
  p = leading_order_rate(p0, pv, P)
  # Binomial variances of every term, propagated to p.
  var = p0*(1 - p0*R)/(n0*R) if f0 > 0 else 0.0
  for i, c in enumerate(C):
    n, q = V.single[c]*K, P[i]
    w = pv if reading == "aggregate" else pv[i]
    var += w**2*q*(1 - q*R)/(n*R)
    var += q**2*w*(1 - w)/V.shots_total
  s = math.sqrt(max(var, 0.0))/(p*math.log(10)) if p > 0 else math.nan
  return RateEstimate(p, s, f0, n0, accounting)

def _batches(shots: int, size: int) -> list:
  return [min(size, shots - i) for i in range(0, shots, size)]

def _run_batch(circuit: GadgetCircuit, spec: BenchmarkSpec, b: int, shots: int) -> ShotTally:
  rng = np.random.default_rng(np.random.SeedSequence([spec.seed, b]))
  S = State(circuit.n_qubits, shots, rng, spec.noise)
  circuit.program.run(S)
  T = ShotTally.from_state(S, spec.rounds)
  log.debug(f"Batch {b}: {shots} shots, {T.passed} passed, {int(T.passed_failures.sum())} failures.")
  return T

def run_benchmark(spec: BenchmarkSpec, batch: int = BATCH, threads: int = 1, progress: bool = True,
                  circuit: GadgetCircuit = None) -> ShotTally:
  """
  Runs `spec.shots` shots of the CNOT benchmark and tallies them. Batches are executed by
  `threads` worker threads and merged in batch order.
  """
  if batch <= 0: raise ValueError(f"Batch size must be positive, got {batch}!")
  if threads <= 0: raise ValueError(f"Thread count must be positive, got {threads}!")
  C = build_cnot_benchmark(spec) if circuit is None else circuit
  B = _batches(spec.shots, batch)
  K = C.tower.K()
  if len(B) == 0: return ShotTally(K, spec.rounds)
  bar = tqdm(total = spec.shots, desc = f"{spec.code} L{spec.level} p={spec.noise.p:.2e}", unit = "shot",
             disable = not progress)
  R = [None]*len(B)
  with concurrent.futures.ThreadPoolExecutor(max_workers = threads) as pool:
    futures = {pool.submit(_run_batch, C, spec, b, n): b for b, n in enumerate(B)}
    for f in concurrent.futures.as_completed(futures):
      b = futures[f]
      R[b] = f.result()
      bar.update(B[b])
  bar.close()
  T = functools.reduce(ShotTally.merge, R)
  T.check()
  log.info(f"{spec.code} level {spec.level} at p={spec.noise.p:g}: {T.shots_total} shots, {T.passed} passed, "
           f"{int(T.passed_failures.sum())} logical failures.")
  if T.passed == 0: log.warning(f"No shot of {spec.code} at p={spec.noise.p:g} passed every verification!")
  return T

def record(spec: BenchmarkSpec, tally: ShotTally, estimate: RateEstimate, config: dict = None) -> dict:
  "One result record of a simulated point, as written by the command line front end."
  R = {"code": spec.code, "family": spec.family, "level": spec.level, "r": spec.r, "r_next": spec.r_next,
       "variant": spec.variant, "p": spec.noise.p, "gamma": spec.noise.gamma, "shots": tally.shots_total,
       "seed": spec.seed, "accounting": estimate.accounting, "p_L": estimate.p_L,
       "sigma_log10": estimate.sigma_log10, "failures": estimate.failures, "trials": estimate.trials,
       "pass_shots": tally.passed, "p_ver": tally.verification_rate(), "tally": tally.to_dict()}
  if config is not None: R["config"] = config
  return R

COLUMNS = ["code", "level", "r", "r_next", "variant", "p", "gamma", "shots", "seed", "accounting", "p_L",
           "sigma_log10", "failures", "trials", "pass_shots", "p_ver"]

def records(rows: list) -> pd.DataFrame:
  "Flat table of result records (nested tally and config fields are left out)."
  return pd.DataFrame([{k: r.get(k) for k in COLUMNS} for r in rows], columns = COLUMNS)
