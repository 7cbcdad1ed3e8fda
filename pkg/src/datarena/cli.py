"""Command-line surface: forge bundles, validate and score submissions
locally, serve the arena, and talk to a running service."""

import json
import sys
from pathlib import Path

import click
import httpx

from .bundles import load_bundle, write_bundle
from .errors import HarnessError
from .evaluators import Submission, evaluate, validate as validate_submission
from .forge import (
    ForgeSpec,
    forge_debugging_problem,
    forge_selection_problem,
    forge_slicing_batch,
    forge_test_set_problem,
    forge_training_set_problem,
    forge_valuation_batch,
)
from .models import canonical_json

URL_ENVVAR = "DATARENA_URL"
DATA_ROOT_ENVVAR = "DATARENA_DATA_ROOT"

FORGE_TYPES = ("training_set", "test_set", "selection", "debugging",
               "valuation", "slicing")


def emit(ctx, obj, text_lines=None):
    """Print obj as canonical JSON, or as plain text when --format text."""
    if ctx.obj["format"] == "json" or text_lines is None:
        click.echo(canonical_json(obj))
    else:
        for line in text_lines:
            click.echo(line)


def fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--format", "fmt", type=click.Choice(["json", "text"]),
              default="json", show_default=True, help="stdout format")
@click.pass_context
def main(ctx, fmt):
    """Benchmark harness for data-centric evaluation tasks."""
    ctx.ensure_object(dict)
    ctx.obj["format"] = fmt


@main.command("forge")
@click.argument("task_type", type=click.Choice(FORGE_TYPES))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--num-classes", type=int, default=6, show_default=True)
@click.option("--per-class-count", type=int, default=167, show_default=True)
@click.option("--dim", type=int, default=32, show_default=True)
@click.option("--cluster-spread", type=float, default=1.0, show_default=True)
@click.option("--splits", type=(float, float, float), default=(0.6, 0.2, 0.2),
              show_default=True)
@click.option("--budget", type=int, default=None,
              help="selection/debugging budget")
@click.option("--rate", type=float, default=0.3, show_default=True,
              help="debugging label corruption rate")
@click.option("--null-rate", type=float, default=0.0, show_default=True,
              help="debugging missing-feature rate")
@click.option("--eval-mode", type=click.Choice(["gap", "inspection"]),
              default="gap", show_default=True)
@click.option("--num-problems", type=int, default=None,
              help="valuation/slicing batch size")
@click.option("--k", type=int, default=10, show_default=True,
              help="slicing precision cutoff")
@click.option("--with-concealed", is_flag=True,
              help="add a concealed counterpart (selection)")
@click.pass_context
def cmd_forge(ctx, task_type, seed, out, num_classes, per_class_count, dim,
              cluster_spread, splits, budget, rate, null_rate, eval_mode,
              num_problems, k, with_concealed):
    """Generate a problem bundle at OUT."""
    try:
        spec = ForgeSpec(seed=seed, num_classes=num_classes,
                         per_class_count=per_class_count, dim=dim,
                         cluster_spread=cluster_spread, splits=splits)
        if task_type == "training_set":
            problem = forge_training_set_problem(spec)
        elif task_type == "test_set":
            problem = forge_test_set_problem(spec)
        elif task_type == "selection":
            problem = forge_selection_problem(
                spec, budget=budget or 50, with_concealed=with_concealed)
        elif task_type == "debugging":
            problem = forge_debugging_problem(
                spec, rate=rate, null_rate=null_rate, budget=budget,
                eval_mode=eval_mode)
        elif task_type == "valuation":
            problem = forge_valuation_batch(
                spec, num_problems=num_problems or 5)
        else:
            problem = forge_slicing_batch(
                spec, num_problems=num_problems or 3, k=k)
        digest = write_bundle(problem, out)
    except (HarnessError, ValueError) as exc:
        fail(str(exc))
    emit(ctx, {"out": str(out), "manifest_hash": digest},
         [f"bundle written to {out}", f"manifest hash {digest}"])


def _load_pair(bundle_path, submission_path):
    problem = load_bundle(bundle_path)
    envelope = json.loads(Path(submission_path).read_text())
    return problem, Submission.from_dict(envelope)


@main.command("validate")
@click.argument("bundle", type=click.Path(exists=True, path_type=Path))
@click.argument("submission", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def cmd_validate(ctx, bundle, submission):
    """Check a submission file against a bundle; exit 2 on violations."""
    try:
        problem, sub = _load_pair(bundle, submission)
    except (HarnessError, json.JSONDecodeError, OSError) as exc:
        fail(str(exc))
    report = validate_submission(sub, problem)
    emit(ctx, report.to_dict(),
         ["ok"] if report.ok else
         [f"{v['code']}: {v['detail']}" for v in report.violations])
    sys.exit(0 if report.ok else 2)


@main.command("eval")
@click.argument("bundle", type=click.Path(exists=True, path_type=Path))
@click.argument("submission", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def cmd_eval(ctx, bundle, submission):
    """Validate then score a submission locally; print ScoreRecords."""
    try:
        problem, sub = _load_pair(bundle, submission)
    except (HarnessError, json.JSONDecodeError, OSError) as exc:
        fail(str(exc))
    report = validate_submission(sub, problem)
    if not report.ok:
        emit(ctx, report.to_dict(),
             [f"{v['code']}: {v['detail']}" for v in report.violations])
        sys.exit(2)
    try:
        records = evaluate(problem, sub)
    except HarnessError as exc:
        fail(str(exc))
    emit(ctx, [r.to_dict() for r in records],
         [f"{r.metric_name} = {r.value!r}"
          + (" (concealed)" if r.concealed else "") for r in records])


@main.command("serve")
@click.option("--data-root", envvar=DATA_ROOT_ENVVAR, required=True,
              type=click.Path(path_type=Path))
@click.option("--listen", default="127.0.0.1:8080", show_default=True,
              help="host:port to bind")
def cmd_serve(data_root, listen):
    """Run the arena HTTP service over DATA_ROOT."""
    import uvicorn

    from .arena import Arena, create_app

    host, _, port = listen.rpartition(":")
    app = create_app(Arena(data_root))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port),
                log_level="warning")


def _request(method, url, **kwargs):
    try:
        return httpx.request(method, url, timeout=30.0, **kwargs)
    except httpx.HTTPError as exc:
        fail(f"request failed: {exc}")


@main.command("submit")
@click.option("--url", envvar=URL_ENVVAR, required=True,
              help="arena base URL")
@click.argument("task_id")
@click.argument("submission", type=click.Path(exists=True, path_type=Path))
@click.pass_context
def cmd_submit(ctx, url, task_id, submission):
    """Send a submission file to a running arena."""
    try:
        envelope = json.loads(Path(submission).read_text())
    except (json.JSONDecodeError, OSError) as exc:
        fail(str(exc))
    resp = _request("POST", f"{url.rstrip('/')}/tasks/{task_id}/submissions",
                    json=envelope)
    body = resp.json()
    if resp.status_code == 422:
        emit(ctx, body, [f"{v['code']}: {v['detail']}"
                         for v in body["report"]["violations"]])
        sys.exit(2)
    if resp.status_code != 200:
        fail(f"HTTP {resp.status_code}: {body.get('detail', resp.text)}")
    emit(ctx, body, [f"{body['submission_id']} {body['status']}"])


@main.command("leaderboard")
@click.option("--url", envvar=URL_ENVVAR, required=True,
              help="arena base URL")
@click.argument("task_id")
@click.option("--division", type=click.Choice(["open", "closed"]),
              default=None)
@click.option("--history", is_flag=True, help="show all entries, not one per submitter")
@click.pass_context
def cmd_leaderboard(ctx, url, task_id, division, history):
    """Fetch and render a task leaderboard."""
    params = {"history": history}
    if division:
        params["division"] = division
    resp = _request("GET",
                    f"{url.rstrip('/')}/tasks/{task_id}/leaderboard",
                    params=params)
    body = resp.json()
    if resp.status_code != 200:
        fail(f"HTTP {resp.status_code}: {body.get('detail', resp.text)}")
    header = (f"{'rank':>4}  {'submitter':<16} {'division':<8} "
              f"{body['metric_name']:>12}  submitted_at")
    lines = [header]
    for rank, e in enumerate(body["entries"], start=1):
        lines.append(f"{rank:>4}  {e['submitter']:<16} {e['division']:<8} "
                     f"{e['display_value']:>12.4f}  {e['submitted_at']}")
    emit(ctx, body, lines)


if __name__ == "__main__":
    main()
