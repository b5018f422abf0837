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

"""Module declaring the singleton command-line application.

The singleton allows the modules in `lite_diag.commands` to register their
commands on the same application using `@app.command` annotations, thereby
'coordinating' the assembly of the command line.
"""

import typer

app = typer.Typer(
    name="lite-diag",
    help="Lightweight fault diagnosis for multivariate flight sensor data.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)

ablate_app = typer.Typer(
    help="Ablation studies on synthetic data.",
    no_args_is_help=True,
)
app.add_typer(ablate_app, name="ablate")
