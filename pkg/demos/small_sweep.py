"""A reduced Monte-Carlo sweep written to CSV.

Five draws per cell over three budgets on the (M=1, N_R=8) and (M=4, N_R=2)
layouts; takes a few minutes on one core. The full desk-scale sweep is
``twrelay sweep --config default``.

    python3 demos/small_sweep.py [out.csv]
"""
import sys

from twrelay.bench import SweepConfig, run_sweep, write_csv

cfg = SweepConfig(
    scenarios=((2, 1, 8), (2, 4, 2)),
    budgets_dbw=(0.0, 15.0, 30.0),
    realizations=5,
    modes=("maximin", "ee", "ee_ow", "oneway"),
)
res = run_sweep(cfg, progress=lambda i, n: print(f"draw {i}/{n}", end="\r", flush=True))
out = sys.argv[1] if len(sys.argv) > 1 else "small_sweep.csv"
write_csv(res.rows, out)
print(f"\nwrote {out}")
for s in cfg.scenarios:
    for b in cfg.budgets_dbw:
        print(
            f"M={s[1]} N_R={s[2]} {b:>4g} dBW  min-pair {res.value(s, b, 'maximin', 'min_pair'):.3f}"
            f"  EE {res.value(s, b, 'ee', 'ee'):.3f}  EE-OW {res.value(s, b, 'ee_ow', 'ee'):.3f}"
            f"  one-way {res.value(s, b, 'oneway', 'ee'):.3f}"
        )
