import functools, pathlib

import lark
import numpy as np

from .engine import Kind, CircuitLocation
from .planner import ConcatChain, table1_chain

PRESETS = {"table1": table1_chain}

@functools.cache
def grammar() -> lark.Lark:
  with open(pathlib.Path(__file__).resolve().parent.joinpath("grammar.lark"), "r") as f:
    return lark.Lark(f, start = ["chain", "grid", "location"], parser = "lalr")

def _int(t) -> int:
  x = float(t)
  if x != int(x): raise ValueError(f"Expected an integer, got {t}!")
  return int(x)

class ChainTransformer(lark.Transformer):
  def preset(self, C): return PRESETS[str(C[0])]()
  def stage(self, S): return _int(S[0])
  def stages(self, S): return tuple(S)
  def concat(self, C): return ConcatChain(str(C[0]), _int(C[1]), C[2] if len(C) > 2 else ())

class GridTransformer(lark.Transformer):
  def values(self, V): return np.array([float(v) for v in V], dtype = np.float64)
  def span(self, V):
    a, b, n = float(V[0]), float(V[1]), _int(V[2])
    scale = str(V[3]) if len(V) > 3 else "log"
    if n < 1: raise ValueError(f"A grid needs at least one point, got {n}!")
    if scale == "lin": return np.linspace(a, b, n)
    if a <= 0 or b <= 0: raise ValueError("Logarithmic grids need positive endpoints!")
    return np.geomspace(a, b, n)

class LocationTransformer(lark.Transformer):
  def control(self, C): return tuple(_int(c) for c in C)
  def location(self, L):
    c = L.pop() if isinstance(L[-1], tuple) else None
    return CircuitLocation(Kind.parse(str(L[0])), tuple(_int(t) for t in L[1:-1]), _int(L[-1]), c)

def _parse(text: str, start: str, T: lark.Transformer, what: str):
  try: return T.transform(grammar().parse(text.strip(), start = start))
  except lark.exceptions.VisitError as ex: raise ex.orig_exc
  except lark.exceptions.LarkError as ex: raise ValueError(f"Malformed {what} '{text}': {ex}!")

def parse_chain(text: str) -> ConcatChain:
  "Parses a chain expression such as `c4c6:5+Q5,Q6,Q7,Q7`, `surface:41` or `table1`."
  return _parse(text, "chain", ChainTransformer(), "chain expression")

def parse_grid(text: str) -> np.ndarray:
  "Parses a grid of physical error rates: `1e-3`, `1e-4,1e-3` or `1e-4:1e-2:5log`."
  return _parse(text, "grid", GridTransformer(), "grid expression")

def parse_circuit(text: str) -> list:
  "Parses a circuit dump, skipping blank and `#` comment lines."
  C = []
  for i, line in enumerate(text.splitlines(), start = 1):
    line = line.strip()
    if len(line) == 0 or line.startswith("#"): continue
    try: C.append(_parse(line, "location", LocationTransformer(), "circuit line"))
    except (ValueError, KeyError) as ex: raise ValueError(f"Line {i}: {str(ex).strip(chr(34) + chr(39))}")
  return C
