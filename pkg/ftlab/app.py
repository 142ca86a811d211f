import dataclasses, json, logging, math, os, sys

import numpy as np
import pandas as pd

import ftlab
from .noise import NoiseParams
from .gadgets import BenchmarkSpec
from .estimator import ACCOUNTINGS, run_benchmark, logical_cnot_rate, record, records
from .fit import load_constants, fibonacci, fit_fixed_exponent, fit_power_law, fit_c4c6, fit_c4c6_levels, \
  surface_curve, thresholds
from .planner import UNDERLYING, InfeasibleError, compose_table, overhead_table, surface_overhead_for_target, \
  rsa_toffoli_count, rsa_cnot_count, classical_error_budget
from .grammar import parse_chain, parse_grid

log = logging.getLogger(__name__)

class ConfigError(ValueError):
  "Invalid combination of command line options."

COMMANDS = ["simulate", "fit", "compose", "optimize", "targets"]
COMMANDS_HELP = {
  "simulate": "Runs the logical CNOT benchmark of a code over a grid of physical error rates.",
  "fit": "Fits scaling constants to simulate outputs given as files. CSV output is the table of fits\n" \
         "               (constant, exponent, value, sigma, points); --format=json writes the constants.",
  "compose": "Tabulates overhead and logical error rate of a concatenation chain, level by level.",
  "optimize": "Finds the chains of least overhead reaching a target logical error rate.",
  "targets": "Prints the CNOT count of RSA factoring and the classical error budget.",
}

ARGUMENTS = ["code", "level", "r", "r-next", "p", "gamma", "shots", "seed", "variant", "prep", "idle",
             "accounting", "threads", "chain", "target", "underlying", "bits", "ops", "seconds", "output",
             "format", "exponent", "verbose", "quiet", "help"]
ARGUMENTS_SHORTCUTS = ["c", "l", "r", "n", "p", "g", "s", "e", "V", "P", "i", "a", "j", "C", "T", "u", "b",
                       "O", "x", "o", "f", "E", "v", "q", "h"]
ARGUMENTS_HELP = {
  "code": "Code family of the simulated protocol.",
  "level": "Concatenation level of the simulated protocol.",
  "r": "Hamming parameter r of Q_r (3..8).",
  "r-next": "Hamming parameter of the code the protocol is built for (r..8).",
  "p": "Physical error rates: a list `1e-4,1e-3` or a range `1e-4:1e-2:5log`.",
  "gamma": "Idle error rule: p, p/2, p/10 or a number.",
  "shots": "Number of benchmark shots per point.",
  "seed": "Master seed; defaults to $FTLAB_SEED or 0.",
  "variant": "Benchmark rounds.",
  "prep": "Encoder of |0> and |+> of the Steane code.",
  "idle": "Idle locations inside level-1 gadgets.",
  "accounting": "Logical error rate accounting.",
  "threads": "Number of worker threads.",
  "chain": "Chain expression, e.g. `c4c6:5+Q5,Q6,Q7,Q7` or `table1`.",
  "target": "Target logical error rate.",
  "underlying": "Underlying code of optimized chains.",
  "bits": "RSA modulus size in bits.",
  "ops": "Elementary operations per second of the classical computer.",
  "seconds": "Duration of the classical computation.",
  "output": "Output file; stdout if absent.",
  "format": "Output format.",
  "exponent": "Exponents of the fitted power laws.",
  "verbose": "Logging level.",
  "quiet": "Hides progress bars.",
  "help": "Shows this help message.",
}
# A list of (value, help) pairs is a choice whose first value is the default; a string is the
# metavariable of a free value; None is a flag.
ARGUMENTS_VALUES = {
  "code": [("c4", "Level-1 C4 (the first level of C4/C6)."), ("c4c6", "C4/C6."), ("steane", "Steane."),
           ("c4steane", "C4 followed by Steane."), ("hamming", "Quantum Hamming code Q_r.")],
  "level": "<int>", "r": "<int>", "r-next": "<int>", "p": "<grid>",
  "gamma": [("p", "γ = p."), ("p/2", "γ = p/2."), ("p/10", "γ = p/10.")],
  "shots": "<int>", "seed": "<int>",
  "variant": [("full", "Ten noisy CNOT rounds."), ("simplified", "One noisy CNOT (level-2 Steane, C4/Steane).")],
  "prep": [("goto", "Eight-qubit encoder with one flag ancilla."), ("conventional", "Latin rectangle encoder with copy verification.")],
  "idle": [("lockstep", "Idles on waiting qubits."), ("none", "No idle locations.")],
  "accounting": [("postselect_only", "Shots passing every verification."),
                 ("leading_order", "Plus the leading-order share of single verification failures.")],
  "threads": "<int>", "chain": "<chain>", "target": "<float>",
  "underlying": [("all", "Every underlying code and the bare surface code.")] + [(u, f"{u} only.") for u in UNDERLYING],
  "bits": "<int>", "ops": "<float>", "seconds": "<float>", "output": "<path>",
  "format": [("csv", "Comma-separated values."), ("json", "JSON records.")],
  "exponent": [("fixed", "Exponents set by the code distance."), ("free", "Also fits every exponent (diagnostics).")],
  "verbose": [("warning", "Warnings only."), ("info", "Progress information."), ("debug", "Per-batch tallies.")],
  "quiet": None, "help": None,
}
ARGUMENTS_HEADERS = [f"--{ARGUMENTS[i]}=<val> | -{ARGUMENTS_SHORTCUTS[i]} <val>" \
                     if ARGUMENTS_VALUES[a] is not None \
                     else f"--{ARGUMENTS[i]} | -{ARGUMENTS_SHORTCUTS[i]}" \
                     for i, a in enumerate(ARGUMENTS)]
ARGUMENTS_VALUES_HEADERS = {k: [v[0] for v in ARGUMENTS_VALUES[k]] if isinstance(ARGUMENTS_VALUES[k], list) \
                            else None for k in ARGUMENTS}
ARGUMENTS_LJUST = len(max(ARGUMENTS_HEADERS, key=len))
ARGUMENTS_VALUES_LJUST = {k: len(max(ARGUMENTS_VALUES_HEADERS[k], key=len)) \
                          if ARGUMENTS_VALUES_HEADERS[k] is not None else None for k in ARGUMENTS}

EXAMPLES = [
"""
  % Logical CNOT error rate of the level-1 C4 protocol at p = 10⁻³.
  ftlab simulate --code=c4 --p=1e-3 --shots=100000
""",
"""
  % Q3 protocol built for Q4, with leading-order accounting of verification failures.
  ftlab simulate --code=hamming --r=3 --r-next=4 --p=3e-4 --accounting=leading_order
""",
"""
  % Level-by-level overhead and logical error rate of the level-5 C4/C6 code with Q5, Q6, Q7, Q7.
  ftlab compose --chain=table1 --p=1e-3
""",
"""
  % Least overhead chains over C4/C6 reaching 10⁻²⁴.
  ftlab optimize --p=1e-4,1e-3,1e-2 --target=1e-24 --underlying=c4c6
""",
"""
  % Fits constants to simulated points and writes them as JSON.
  ftlab fit --format=json --output=constants.json c4.csv steane.csv
""",
]

def _count(s: str) -> int:
  x = float(s)
  if x != int(x): raise ConfigError(f"Expected an integer, got {s}!")
  return int(x)

def _gamma(s: str) -> str:
  if s in ("p", "p/2", "p/10"): return s
  try: float(s)
  except ValueError: raise ConfigError(f"Unknown gamma rule {s}!")
  return s

ARGUMENTS_TYPES = {"level": _count, "r": _count, "r-next": _count, "p": lambda s: tuple(map(float, parse_grid(s))),
                   "gamma": _gamma, "shots": _count, "seed": _count, "threads": _count, "target": float,
                   "bits": _count, "ops": float, "seconds": float}

@dataclasses.dataclass
class RunConfig:
  "Everything a run depends on; embedded in every output it produces."
  command: str = "simulate"
  code: str = "c4"
  level: int = 1
  r: int = None
  r_next: int = None
  p: tuple = (1e-3,)
  gamma: str = "p"
  shots: int = 10**6
  seed: int = dataclasses.field(default_factory = lambda: int(os.environ.get("FTLAB_SEED", 0)))
  variant: str = "full"
  prep: str = "goto"
  idle: str = "lockstep"
  accounting: str = "postselect_only"
  threads: int = 1
  chain: str = "table1"
  target: float = 1e-24
  underlying: str = "all"
  bits: int = 2048
  ops: float = 5e17
  seconds: float = 2.6e6
  output: str = None
  format: str = "csv"
  exponent: str = "fixed"
  verbose: str = "warning"
  quiet: bool = False
  inputs: tuple = ()

  def __post_init__(self):
    if self.command not in COMMANDS: raise ConfigError(f"Unknown command {self.command}!")
    self.p = tuple(float(x) for x in np.atleast_1d(self.p))
    self.inputs = tuple(self.inputs)
    if self.code != "hamming" and (self.r is not None or self.r_next is not None):
      raise ConfigError("Only --code=hamming takes --r and --r-next!")
    if self.code == "hamming" and self.r is None: raise ConfigError("--code=hamming needs --r!")
    if self.code == "c4" and self.level != 1: raise ConfigError("--code=c4 is level 1 only; use --code=c4c6!")
    if self.threads < 1: raise ConfigError(f"Thread count must be positive, got {self.threads}!")
    if self.command == "fit" and len(self.inputs) == 0: raise ConfigError("fit needs at least one input file!")

  def spec(self, p: float) -> BenchmarkSpec:
    "Benchmark of one point of the grid."
    family = "c4c6" if self.code == "c4" else self.code
    try:
      return BenchmarkSpec(family, self.level, self.r, self.r_next, self.variant, self.shots,
                           NoiseParams.preset(p, self.gamma), self.seed, self.prep, self.idle)
    except (ValueError, KeyError) as ex: raise ConfigError(str(ex).strip("'\""))

  def to_dict(self) -> dict: return dataclasses.asdict(self)

def simulate(config: RunConfig) -> list:
  "One result record per point of the grid."
  R = []
  for p in config.p:
    spec = config.spec(p)
    T = run_benchmark(spec, threads = config.threads, progress = not config.quiet)
    R.append(record(spec, T, logical_cnot_rate(T, config.accounting), config.to_dict()))
  return R

def read_records(path: str) -> pd.DataFrame:
  "Reads a simulate output, CSV or JSON."
  if str(path).endswith(".json"):
    with open(path, "r") as f: D = json.load(f)
    return records(D["rows"] if isinstance(D, dict) else D)
  return pd.read_csv(path, comment = "#")

def _points(D: pd.DataFrame) -> list:
  D = D[np.isfinite(D["sigma_log10"].astype(float)) & (D["p_L"].astype(float) > 0)]
  return list(zip(D["p"].astype(float), D["p_L"].astype(float), D["sigma_log10"].astype(float)))

def fit(config: RunConfig) -> tuple:
  """
  Fits constants to every (code, level) group of the input records. Returns the constants of
  the `gamma` model with the fitted values replaced, and a table of the fits.
  """
  D = pd.concat([read_records(f) for f in config.inputs], ignore_index = True)
  C = load_constants(config.gamma)
  H, rows, c4c6 = dict(C.hamming), [], {}
  steane, c4_steane = list(C.steane), list(C.c4_steane)
  def add(name, exponent, pts):
    a, s = fit_fixed_exponent(pts, exponent)
    rows.append({"constant": name, "exponent": exponent, "value": a, "sigma": s, "points": len(pts)})
    return a
  for (code, level, r, r2), G in D.groupby(["code", "level", "r", "r_next"], dropna = False):
    P, level = _points(G), int(level)
    if len(P) == 0:
      log.warning(f"No point of {code} level {level} has a defined σ; skipped.")
      continue
    if config.exponent == "free":
      a, k, cov = fit_power_law(P)
      rows.append({"constant": f"{code}_level{level}_free", "exponent": k, "value": a,
                   "sigma": math.sqrt(cov[1, 1]), "points": len(P)})
    if code == "c4c6": c4c6[level] = P
    elif code == "steane" and level <= 2: steane[level - 1] = add(f"steane{level}", 2*level, P)
    elif code == "c4steane" and level <= 2: c4_steane[level - 1] = add(f"c4steane{level}", 2*level - 1, P)
    elif str(code).startswith("Q"):
      r = int(r)
      r2 = r + 1 if pd.isna(r2) else int(r2)
      H[(r, r2)] = add(f"a_{r}^({r2})", 2, P)
    else: raise ConfigError(f"No fit for code {code} at level {level}!")
  if len(c4c6) >= 2:
    A, B, cov = fit_c4c6(c4c6)
    n = sum(map(len, c4c6.values()))
    rows.append({"constant": "c4c6_A", "exponent": None, "value": A, "sigma": A*math.log(10)*math.sqrt(cov[0, 0]), "points": n})
    rows.append({"constant": "c4c6_B", "exponent": None, "value": B, "sigma": B*math.log(10)*math.sqrt(cov[1, 1]), "points": n})
    C = C.replace(c4c6 = (A, B))
  for l, (c, s) in (fit_c4c6_levels(c4c6) if len(c4c6) > 0 else {}).items():
    rows.append({"constant": f"c4c6_level{l}", "exponent": fibonacci(l), "value": c, "sigma": s, "points": len(c4c6[l])})
  C = C.replace(hamming = H, steane = tuple(steane), c4_steane = tuple(c4_steane))
  for k, v in thresholds(C).items(): log.info(f"Threshold of {k}: {v:.3g}.")
  return C, pd.DataFrame(rows)

def compose(config: RunConfig) -> pd.DataFrame:
  chain, C = parse_chain(config.chain), load_constants(config.gamma)
  T = [compose_table(chain, p, C).assign(p = p, chain = str(chain)) for p in config.p]
  return pd.concat(T, ignore_index = True)

def optimize(config: RunConfig) -> pd.DataFrame:
  "Least overhead chain per underlying code and p; infeasible cells are marked `-`."
  U = UNDERLYING if config.underlying == "all" else (config.underlying,)
  T = overhead_table(config.p, config.target, config.gamma, U)
  if config.underlying in ("all", "surface"):
    C, B = load_constants(config.gamma), []
    for p in config.p:
      R = {"p": p, "gamma": config.gamma, "target": config.target, "underlying": "surface-bare"}
      try:
        d, n = surface_overhead_for_target(p, config.target, C)
        R |= {"chain": f"surface({d})", "N": n, "K": 1, "overhead": float(n), "p_L": float(surface_curve(d, p, C))}
      except InfeasibleError: R |= {"chain": "-", "N": None, "K": None, "overhead": None, "p_L": None}
      B.append(R)
    T = pd.concat([T, pd.DataFrame(B)], ignore_index = True)
  if (T["chain"] == "-").all():
    raise InfeasibleError(f"No chain reaches {config.target:g} at any p of {list(config.p)}!")
  return T

def targets(config: RunConfig) -> pd.DataFrame:
  n, ops, s = config.bits, config.ops, config.seconds
  return pd.DataFrame([
    {"quantity": "toffoli", "value": rsa_toffoli_count(n), "derivation": f"0.3n³ + 0.0005n³ lg n, n={n}"},
    {"quantity": "cnot", "value": rsa_cnot_count(n), "derivation": "six CNOTs per Toffoli"},
    {"quantity": "budget", "value": classical_error_budget(ops, s), "derivation": f"1/({ops:g} ops/s × {s:g} s)"},
    {"quantity": "budget_per_cnot", "value": 1/rsa_cnot_count(n), "derivation": "one failure per factoring run"},
  ])

def write(config: RunConfig, T, out = None):
  "Writes a table (or simulate records) as CSV with a `#` config header, or as JSON with the config embedded."
  f = open(config.output, "w") if config.output is not None else (sys.stdout if out is None else out)
  try:
    if config.format == "json":
      rows = T if isinstance(T, list) else T.astype(object).where(T.notna(), None).to_dict("records")
      json.dump({"version": ftlab.__version__, "config": config.to_dict(), "rows": rows}, f, indent = 2, default = float)
      f.write("\n")
    else:
      f.write(f"# ftlab {ftlab.__version__} {json.dumps(config.to_dict())}\n")
      (records(T) if isinstance(T, list) else T).to_csv(f, index = False)
  finally:
    if config.output is not None: f.close()

def print_help(f = sys.stdout):
  print("""ftlab - Fault-tolerance lab for concatenated quantum codes
Usage: ftlab <command> [options] [files]

COMMANDS\n""", file = f)
  for c in COMMANDS: print("  " + c.ljust(10, ' ') + " : " + COMMANDS_HELP[c], file = f)
  print("\nOPTIONS\n", file = f)
  for i, a in enumerate(ARGUMENTS):
    print("  " + ARGUMENTS_HEADERS[i].ljust(ARGUMENTS_LJUST, ' ') + " : " + ARGUMENTS_HELP[a], file = f)
    if ARGUMENTS_VALUES_HEADERS[a] is not None:
      print("    Possible values:", file = f)
      for j in range(len(ARGUMENTS_VALUES[a])):
        print("      " + \
              ARGUMENTS_VALUES_HEADERS[a][j].ljust(ARGUMENTS_VALUES_LJUST[a], ' ') + " : " + \
              ARGUMENTS_VALUES[a][j][1], file = f)

  print("\nDefault values for options come first.", file = f)
  print("\nEXAMPLES", file = f)
  for e in EXAMPLES: print(e, file = f)

def try_arg(args: dict, a: str, pre: str, sep: str) -> bool:
  "Parses `a` as an option with prefix `pre` and value separator `sep`; False if it is not one."
  if not a.startswith(pre): return False
  T = a.split(sep, 1)
  arg = T[0][len(pre):]
  if arg in ARGUMENTS_SHORTCUTS: arg = ARGUMENTS[ARGUMENTS_SHORTCUTS.index(arg)]
  if arg not in ARGUMENTS: raise ConfigError(f"Unrecognized option: {T[0]}!")
  if arg == "help":
    print_help()
    sys.exit(0)
  V = ARGUMENTS_VALUES[arg]
  if V is None:
    args[arg] = True
    return True
  if len(T) != 2: raise ConfigError(f"Unable to parse argument-value: {a}!")
  val = T[1]
  if isinstance(V, list):
    if val not in ARGUMENTS_VALUES_HEADERS[arg] and not (arg == "gamma" and _gamma(val)):
      raise ConfigError(f"Unrecognized option {val} for argument {arg}!")
    args[arg] = val
  else:
    try: args[arg] = ARGUMENTS_TYPES.get(arg, str)(val)
    except ConfigError: raise
    except ValueError as ex: raise ConfigError(f"Bad value {val} for argument {arg}: {ex}")
  return True

def parse_args(argv: list = None) -> RunConfig:
  argv = sys.argv[1:] if argv is None else list(argv)
  if len(argv) == 0 or argv[0] in ("-h", "--help"):
    print_help()
    sys.exit(0)
  if argv[0] not in COMMANDS: raise ConfigError(f"Unknown command {argv[0]}!")
  args, files = {"command": argv[0]}, []
  I = enumerate(argv[1:], start = 1)
  for i, a in I:
    if a.startswith("--"):
      name = a[2:]
      name = ARGUMENTS[ARGUMENTS_SHORTCUTS.index(name)] if name in ARGUMENTS_SHORTCUTS else name
      if "=" not in a and name in ARGUMENTS and ARGUMENTS_VALUES[name] is not None and i + 1 < len(argv):
        try_arg(args, a + "=" + argv[i + 1], "--", "=")
        next(I)
      else: try_arg(args, a, "--", "=")
    elif a.startswith("-") and len(a) > 1 and not a[1].isdigit():
      flag = a[1:] in ARGUMENTS_SHORTCUTS and ARGUMENTS_VALUES[ARGUMENTS[ARGUMENTS_SHORTCUTS.index(a[1:])]] is None
      if flag or i + 1 >= len(argv): try_arg(args, a, "-", " ")
      else:
        try_arg(args, a + " " + argv[i + 1], "-", " ")
        next(I)
    else: files.append(a)
  return RunConfig(**{k.replace("-", "_"): v for k, v in args.items() if k != "help"}, inputs = tuple(files))

def run(config: RunConfig, out = None):
  "Executes a configuration and writes its output."
  log.info(f"ftlab {ftlab.__version__}: {config.command} with seed {config.seed}.")
  if config.command == "simulate": T = simulate(config)
  elif config.command == "fit":
    C, T = fit(config)
    if config.format == "json":
      f = open(config.output, "w") if config.output is not None else (sys.stdout if out is None else out)
      try:
        json.dump({config.gamma: C.to_dict(), "fits": T.astype(object).where(T.notna(), None).to_dict("records"),
                   "config": config.to_dict()}, f, indent = 2)
        f.write("\n")
      finally:
        if config.output is not None: f.close()
      return T
  elif config.command == "compose": T = compose(config)
  elif config.command == "optimize": T = optimize(config)
  else: T = targets(config)
  write(config, T, out)
  return T

def main(argv: list = None) -> int:
  try:
    config = parse_args(argv)
    logging.basicConfig(level = getattr(logging, config.verbose.upper()),
                        format = "%(asctime)s %(name)s %(levelname)s: %(message)s")
    run(config)
  except InfeasibleError as ex:
    print(f"ftlab: {ex}", file = sys.stderr)
    return 3
  except ConfigError as ex:
    print(f"ftlab: {ex}", file = sys.stderr)
    print_help(sys.stderr)
    return 2
  except (ValueError, KeyError, OSError) as ex:
    print(f"ftlab: {str(ex).strip(chr(34) + chr(39))}", file = sys.stderr)
    return 2
  return 0

if __name__ == "__main__": sys.exit(main())
