"""CSV/JSON result files for external plotting."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .errors import CdatcError, NoData
from .scenario import config_to_dict
from .simulator import MonteCarloResult, SimConfig, transmit_rate

FILES = ("nmsd.csv", "thresholds.csv", "transmit_rates.csv", "summary.json")


class IoError(CdatcError, OSError):
    category = "io"


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _threshold_source(results: dict) -> str:
    return "cd-atc" if "cd-atc" in results else next(iter(results))


def summarize(results: dict, config: SimConfig) -> dict:
    window = config.steady_window()
    out = {
        "effective_config": config_to_dict(config),
        "steady_window": list(window),
        "runs": config.runs,
        "steady_nmsd": {},
        "steady_nmsd_db": {},
        "transmit_rates": {},
        "stall_rates": {},
        "steady_tau": {},
        "invariants": {},
    }
    for scheme, res in results.items():
        out["steady_nmsd"][scheme] = res.steady_nmsd(window)
        out["steady_nmsd_db"][scheme] = _num(res.steady_nmsd_db(window))
        out["transmit_rates"][scheme] = [_num(v) for v in transmit_rate(res, window)]
        out["stall_rates"][scheme] = [_num(v) for v in res.stall_rate(window)]
        out["steady_tau"][scheme] = [_num(v) for v in res.steady_tau(window)]
        out["invariants"][scheme] = {
            "battery_violations": res.battery_violations,
            "importance_violations": res.importance_violations,
            "max_weight_violation": res.max_weight_violation,
        }
    return out


def emit_results(results: dict, config: SimConfig, out_dir) -> list:
    """Write the result files for ``results`` (scheme -> MonteCarloResult) into ``out_dir``.

    Rows follow the scheme order of ``results``, then step, then node.
    ``thresholds.csv`` holds the run-averaged thresholds of ``cd-atc`` when it
    was simulated, else of the first scheme. Returns the written paths.
    """
    if not results:
        raise NoData("no results to write")
    for res in results.values():
        if not isinstance(res, MonteCarloResult) or res.runs == 0:
            raise NoData("empty Monte-Carlo result")
    out_dir = Path(out_dir)
    window = config.steady_window()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [out_dir / f for f in FILES]

        with open(paths[0], "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["step", "scheme", "nmsd_db"])
            for scheme, res in results.items():
                for n, v in enumerate(res.nmsd_db):
                    wr.writerow([n, scheme, repr(float(v))])

        src = results[_threshold_source(results)]
        with open(paths[1], "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["step", "node", "tau"])
            for n, row in enumerate(src.tau_mean):
                for k, v in enumerate(row):
                    wr.writerow([n, k + 1, repr(float(v))])

        with open(paths[2], "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["scheme", "node", "transmit_rate", "decision_rate", "stall_rate",
                         "window_start", "window_stop"])
            for scheme, res in results.items():
                rates = transmit_rate(res, window)
                dec = res.decision_rate(window)
                stall = res.stall_rate(window)
                for k in range(len(rates)):
                    wr.writerow([scheme, k + 1, repr(float(rates[k])), repr(float(dec[k])),
                                 repr(float(stall[k])), window[0], window[1]])

        with open(paths[3], "w") as fh:
            json.dump(summarize(results, config), fh, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write results to {out_dir}: {exc}") from exc
    return paths
