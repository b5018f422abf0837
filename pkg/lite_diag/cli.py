# Copyright 2026 The lite-diag Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Entry point for the lite-diag command line."""

import logging
import sys
from typing import Optional, Sequence

from typer import _click as click
import typer

from lite_diag import utils
from lite_diag.coordinator import app
from lite_diag.errors import LiteDiagError

# The following imports are necessary to register the commands with the
# `app` object, even though they are not directly used in this file.
from lite_diag.commands import (  # noqa: F401
    ablate,
    bench,
    cascade,
    data,
    distill,
    explain,
    selection,
    train,
)

logger = logging.getLogger(__name__)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one command; returns 0, 1 on runtime failure or 2 on usage error."""
    utils.configure_logging()
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = app(args=args, prog_name="lite-diag", standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        typer.echo("aborted", err=True)
        return 1
    except (LiteDiagError, OSError) as exc:
        logger.error("%s failed", args[0] if args else "command", exc_info=True)
        typer.echo(f"error: {exc}", err=True)
        return 1
    except (ValueError, TypeError) as exc:
        logger.error(
            "%s failed with an unexpected error",
            args[0] if args else "command",
            exc_info=True,
        )
        typer.echo(f"error: {exc}", err=True)
        return 1
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
