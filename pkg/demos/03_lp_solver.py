"""The bundled simplex solver on a toy problem, and its text dump format."""

import io

from privsignal import LpBuilder, solve

b = LpBuilder()
b.var("x", 0, 4, cost=-3)
b.var("y", cost=-2)
b.row({"x": 1, "y": 1}, "<=", 5)
b.row({"x": 1, "y": -1}, ">=", -1)
lp = b.build()

sol = solve(lp)
print(f"status={sol.status.value} x={sol.x} objective={sol.objective:g} "
      f"iterations={sol.iterations} route={sol.method}")

buf = io.StringIO()
lp.dump(buf)
print("\ntext dump:\n" + buf.getvalue())

b.row({"x": 1}, ">=", 6)
print("adding x >= 6 makes it", solve(b.build()).status.value)
