"""
Summarizes a sweep or grid-convergence CSV written by the harness and prints
observed orders between successive rows.
"""

import numpy as np
import pandas as pd

ERROR_COLUMNS = ["err_no_ad", "err_blackbox", "err_shock", "err_base"]


def observed_orders(df: pd.DataFrame, key: str) -> pd.DataFrame:
    """log(e_k / e_{k+1}) / log(h_k / h_{k+1}) for every error column, rows ordered by key descending."""
    df = df.sort_values(key, ascending=False).reset_index(drop=True)
    log_h = np.log(df[key].to_numpy(dtype=float))
    orders = {f"{key}_from": df[key].iloc[:-1].to_numpy(), f"{key}_to": df[key].iloc[1:].to_numpy()}
    for col in ERROR_COLUMNS:
        if col not in df:
            continue
        log_e = np.log(df[col].to_numpy(dtype=float))
        orders[col] = (log_e[:-1] - log_e[1:]) / (log_h[:-1] - log_h[1:])
    return pd.DataFrame(orders)


def convergence_report(csv_path: str) -> dict:
    print("=" * 70)
    print(f"CONVERGENCE REPORT: {csv_path}")
    print("=" * 70)

    df = pd.read_csv(csv_path, float_precision="round_trip")
    if "dx" in df.columns:
        key = "dx"
    elif "epsilon" in df.columns:
        key = "epsilon"
    else:
        raise ValueError(f"{csv_path} has neither a 'dx' nor an 'epsilon' column")
    print(f"Loaded {len(df)} rows keyed by {key}\n")

    print("COLUMN SUMMARY")
    print("-" * 70)
    present = [c for c in ERROR_COLUMNS if c in df]
    print(df[present].describe().loc[["min", "mean", "max"]].to_string())

    if len(df) < 2:
        print("\nSingle row: no observed order")
        print("=" * 70)
        return {"rows": len(df), "key": key, "orders": {}}

    orders = observed_orders(df, key)
    print("\nOBSERVED ORDERS")
    print("-" * 70)
    print(orders.to_string(index=False, float_format=lambda v: f"{v:7.3f}"))

    if key == "dx":
        print("\nERROR RATIOS PER REFINEMENT")
        print("-" * 70)
        ordered = df.sort_values(key, ascending=False)
        for col in ("err_shock", "err_base"):
            if col in ordered:
                ratios = ordered[col].to_numpy()[:-1] / ordered[col].to_numpy()[1:]
                print(f"  {col:12s}: " + ", ".join(f"{r:.3f}" for r in ratios))

    print("=" * 70)
    return {
        "rows": len(df),
        "key": key,
        "orders": {c: orders[c].tolist() for c in present if c in orders},
    }


if __name__ == "__main__":
    import sys

    if len(sys.argv) < 2:
        print("usage: python -m shock_ad.scripts.convergence_report <sweep_or_gridconv.csv>")
        sys.exit(2)

    try:
        convergence_report(sys.argv[1])
        sys.exit(0)
    except (OSError, ValueError) as e:
        print(f"\nERROR: {e}")
        sys.exit(4)
