import json
import logging
import sys
from functools import wraps

import click

from config import Config
from services.harness_service import HarnessService
from utils.errors import HarnessError, InstanceError, SpeclabError

# Configure logging
logging.basicConfig(level=getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO),
                    format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
logger = logging.getLogger(__name__)


def handle_speclab_error(f):
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except SpeclabError as e:
            logger.error(f"{f.__name__} failed: {str(e)}")
            error = {"error": type(e).__name__, "message": str(e)}
            if isinstance(e, InstanceError) and e.field:
                error["field"] = e.field
            click.echo(json.dumps(error))
            sys.exit(2)
        except OSError as e:
            logger.error(f"{f.__name__} failed: {str(e)}")
            click.echo(json.dumps({"error": type(e).__name__, "message": str(e)}))
            sys.exit(2)
    return decorated_function


def parse_eps_list(text: str):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise HarnessError(f"malformed --eps-list: {str(e)}")
    if not values:
        raise HarnessError("empty eps list")
    return values


@click.group()
@click.option("--log-level", default=None, help="Override SPECLAB_LOG_LEVEL for this run")
def cli(log_level):
    """Spectral-cover variational formula lab"""
    if log_level:
        logging.getLogger().setLevel(log_level.upper())


@cli.command()
@click.option("--instance", required=True, help="Built-in label or path to an instance JSON file")
@click.option("--dump", default=None, type=click.Path(dir_okay=False), help="Write diagnostic JSON here")
@handle_speclab_error
def describe(instance, dump):
    """Print derived counts, branch points and the genericity report"""
    summary = HarnessService().describe(instance, dump)
    click.echo(json.dumps(summary, indent=2))


@cli.command()
@click.option("--instance", required=True, help="Built-in label or path to an instance JSON file")
@click.option("--suite", required=True, type=click.Choice(Config.SUITES))
@click.option("--tol", default=None, type=float, help="Replace every tolerance of the suite")
@click.option("--eps", default=None, type=float, help="Finite-difference step relative to coordinate scale")
@click.option("--report", "report_path", default=None, type=click.Path(dir_okay=False))
@handle_speclab_error
def verify(instance, suite, tol, eps, report_path):
    """Run an acceptance suite; exit code 0 iff every gating check passes"""
    report = HarnessService().run_suite(instance, suite, tol=tol, eps=eps)
    document = json.dumps(report.to_dict(), indent=2, allow_nan=False)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(document)
        logger.info(f"Report written to {report_path}")
    failed = [c.name for c in report.failures]
    click.echo(json.dumps({"instance": report.instance, "suite": report.suite, "pass": report.passed,
                           "checks": len(report.checks), "failed": failed}, indent=2))
    sys.exit(0 if report.passed else 1)


@cli.command()
@click.option("--instance", required=True)
@click.option("--functional", required=True, help="omega, v, B, lnE or Q2")
@click.option("--coord", required=True, help="Coordinate name such as A0 or C1.0.2")
@click.option("--eps-list", required=True, help="Comma-separated relative steps")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@handle_speclab_error
def sweep(instance, functional, coord, eps_list, out):
    """Tabulate finite-difference error against the residue formula"""
    rows = HarnessService().sweep_epsilon(instance, functional, coord, parse_eps_list(eps_list), out)
    for row in rows:
        click.echo(f"{row['eps']:.3e}  err={row['abs_err']:.3e}  ratio={row['ratio'] or '-'}  {row['flag']}")


if __name__ == '__main__':
    cli()
