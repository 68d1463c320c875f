"""Command-line client for the healing engine.

Every command builds a service request and sends it either to a remote
server (``--server``) or straight into the in-process service layer; the CLI
itself only shapes requests and writes files. Exit codes: 0 success, 1 no
feasible healing plan, 2 usage, parse or I/O errors. Set CELLHEAL_LOG=debug
for verbose logging.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click
import httpx
import pydantic
import yaml

from .reports import (
    ASSOCIATION_FIELDS,
    ENERGY_FIELDS,
    SWEEP_FIELDS,
    TRACE_FIELDS,
    write_csv,
)
from .schema import ScenarioDoc
from .service import handlers
from .service.models import (
    OracleRequest,
    OracleResponse,
    RandomScenarioRequest,
    ScenarioResponse,
    SolveOptionsModel,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
)

logger = logging.getLogger("cellheal")


class ServiceClient:
    """Thin transport: POST to a server, or call the handlers in-process."""

    def __init__(self, server: str | None = None,
                 http_client: httpx.Client | None = None):
        self.server = server
        self._http = http_client
        if server and http_client is None:
            self._http = httpx.Client(base_url=server, timeout=600.0)

    def _post(self, path: str, payload, response_model):
        if self._http is None:
            raise RuntimeError("no transport configured")
        reply = self._http.post(path, json=payload.model_dump(mode="json"))
        if reply.status_code != 200:
            raise click.ClickException(
                f"server returned {reply.status_code}: {reply.text}")
        return response_model.model_validate(reply.json())

    def solve(self, request: SolveRequest) -> SolveResponse:
        if self.server or self._http:
            return self._post("/solve", request, SolveResponse)
        return handlers.solve(request)

    def random_scenario(self, request: RandomScenarioRequest) -> ScenarioResponse:
        if self.server or self._http:
            return self._post("/scenarios/random", request, ScenarioResponse)
        return handlers.random_scenario(request)

    def oracle(self, request: OracleRequest) -> OracleResponse:
        if self.server or self._http:
            return self._post("/oracle", request, OracleResponse)
        return handlers.oracle_compare(request)

    def sweep(self, request: SweepRequest) -> SweepResponse:
        if self.server or self._http:
            return self._post("/sweep", request, SweepResponse)
        return handlers.sweep(request)


def _load_doc(path: str) -> ScenarioDoc:
    try:
        raw = yaml.safe_load(Path(path).read_text())
        return ScenarioDoc.model_validate(raw)
    except (OSError, yaml.YAMLError, pydantic.ValidationError) as exc:
        click.echo(f"error: cannot load scenario {path}: {exc}", err=True)
        sys.exit(2)


def _solution_csvs(resp: SolveResponse, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    assoc = [{"block": str(e.block), "user": str(e.user),
              "station_kind": e.station_kind, "station_id": str(e.station_id),
              "subchannel": str(e.subchannel),
              "rate_bps_hz": repr(e.rate_bps_hz)} for e in resp.associations]
    write_csv(assoc, ASSOCIATION_FIELDS, out_dir / "associations.csv")
    energy = [{"block": str(e.block), "station_kind": e.station_kind,
               "station_id": str(e.station_id), "energy_j": repr(e.energy_j)}
              for e in resp.energies]
    write_csv(energy, ENERGY_FIELDS, out_dir / "energy.csv")
    trace = [{"iteration": str(t.iteration),
              "lp_objective_j": "nan" if t.lp_objective_j is None
              else repr(t.lp_objective_j),
              "objective_j": repr(t.objective_j),
              "best_objective_j": "inf" if t.best_objective_j is None
              else repr(t.best_objective_j),
              "reconstruction": t.reconstruction,
              "min_margin_bps_hz": "inf" if t.min_margin_bps_hz is None
              else repr(t.min_margin_bps_hz),
              "active_drones_per_block": ";".join(
                  str(v) for v in t.active_drones_per_block),
              "feasible": str(int(t.feasible))} for t in resp.trace]
    write_csv(trace, TRACE_FIELDS, out_dir / "trace.csv")


def _parse_counts(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in spec.split(",")]


@click.group()
def main() -> None:
    level = os.environ.get("CELLHEAL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


@main.command("run")
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Scenario file (YAML).")
@click.option("--seed", type=int, default=None,
              help="Generate a random instance instead of loading a file.")
@click.option("--users", type=click.IntRange(min=1), default=10,
              help="User count for --seed.")
@click.option("--max-iters", type=click.IntRange(min=1), default=50)
@click.option("--eps", type=float, default=1e-3, show_default=True,
              help="Fractional objective change that stops the loop.")
@click.option("--per-block/--joint", default=True,
              help="Solve the association per block or jointly.")
@click.option("--sca-rounds", type=click.IntRange(min=1), default=1)
@click.option("--out", type=click.Path(file_okay=False), default=".",
              help="Directory for associations/energy/trace CSVs.")
@click.option("--server", default=None, help="Remote service URL.")
def cmd_run(scenario_path, seed, users, max_iters, eps, per_block,
            sca_rounds, out, server) -> None:
    """Solve one healing instance and write the solution CSVs."""
    client = ServiceClient(server)
    if scenario_path is None and seed is None:
        raise click.UsageError("provide --scenario or --seed")
    if scenario_path is not None:
        doc = _load_doc(scenario_path)
    else:
        doc = client.random_scenario(
            RandomScenarioRequest(seed=seed, num_users=users)).scenario
    options = SolveOptionsModel(max_iters=max_iters, eps_th=eps,
                                per_block=per_block, sca_rounds=sca_rounds)
    resp = client.solve(SolveRequest(scenario=doc, options=options))
    _solution_csvs(resp, Path(out))
    active = ";".join(str(v) for v in resp.active_drones_per_block)
    click.echo(f"feasible={resp.feasible} total_energy_j={resp.total_energy_j!r} "
               f"active_drones_per_block={active}")
    if not resp.feasible:
        blocked = ", ".join(f"user {b.user} block {b.block}" for b in resp.blocking)
        click.echo(f"no feasible healing plan; blocked: {blocked or 'unknown'}",
                   err=True)
        sys.exit(1)


@main.command("sweep")
@click.option("--users", default="4..10", show_default=True,
              help="Counts as lo..hi or a comma list.")
@click.option("--trials", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--load-low", type=click.IntRange(min=0), default=46, show_default=True,
              help="Lower bound of the per-block own-user load.")
@click.option("--load-high", type=click.IntRange(min=0), default=50, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="sweep.csv",
              show_default=True)
@click.option("--server", default=None)
def cmd_sweep(users, trials, seed, load_low, load_high, out, server) -> None:
    """Accumulated healing energy versus stranded-user count."""
    client = ServiceClient(server)
    request = SweepRequest(user_counts=_parse_counts(users), trials=trials,
                           base_seed=seed, load_low=load_low,
                           load_high=load_high)
    resp = client.sweep(request)
    rows = [{"num_users": str(r.num_users), "trials": str(r.trials),
             "feasible_trials": str(r.feasible_trials),
             "mean_active_drones": repr(r.mean_active_drones),
             "mean_dbs_energy_j": repr(r.mean_dbs_energy_j),
             "mean_gbs_energy_j": repr(r.mean_gbs_energy_j)}
            for r in resp.rows]
    write_csv(rows, SWEEP_FIELDS, out)
    for r in resp.rows:
        click.echo(f"users={r.num_users} active_drones={r.mean_active_drones:.2f} "
                   f"dbs_energy_j={r.mean_dbs_energy_j:.0f} "
                   f"gbs_energy_j={r.mean_gbs_energy_j:.0f}")


@main.command("oracle")
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Tiny scenario file; defaults to a built-in instance.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Built-in tiny instance seed (ignored with --scenario).")
@click.option("--grid-step", type=float, default=10.0, show_default=True)
@click.option("--server", default=None)
def cmd_oracle(scenario_path, seed, grid_step, server) -> None:
    """Compare the engine against exhaustive search on a tiny instance."""
    client = ServiceClient(server)
    if scenario_path is not None:
        doc = _load_doc(scenario_path)
    else:
        from .scenario import generate_tiny_scenario
        doc = generate_tiny_scenario(seed).doc
    resp = client.oracle(OracleRequest(scenario=doc, grid_step_m=grid_step))
    ratio = "n/a" if resp.ratio is None else f"{resp.ratio:.4f}"
    click.echo(f"engine_energy_j={resp.engine_energy_j!r} "
               f"oracle_energy_j={resp.oracle_energy_j!r} ratio={ratio} "
               f"candidates={resp.enumerated}")


@main.command("generate")
@click.option("--seed", type=int, required=True)
@click.option("--users", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--gbs", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--dbs", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--load-low", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--load-high", type=click.IntRange(min=0), default=50, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--server", default=None)
def cmd_generate(seed, users, gbs, dbs, load_low, load_high, out, server) -> None:
    """Write a random scenario file."""
    client = ServiceClient(server)
    resp = client.random_scenario(RandomScenarioRequest(
        seed=seed, num_users=users, num_gbs=gbs, num_dbs=dbs,
        load_low=load_low, load_high=load_high))
    Path(out).write_text(yaml.safe_dump(resp.scenario.model_dump(mode="json"),
                                        sort_keys=False))
    click.echo(f"wrote {out}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def cmd_serve(host, port) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
