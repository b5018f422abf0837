# Copyright 2026 The lite-diag Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Sessions for formatting, unit tests, coverage and acceptance runs."""

import nox

PYTHON_VERSIONS = ["3.10", "3.11", "3.12", "3.13"]

# black only looks at the package, its tests and this file
SOURCES = ["lite_diag", "tests", "noxfile.py"]
LINE_LENGTH = "80"

TEST_DEPENDENCIES = [
    "pyfakefs>=5.0.0,<6.0",
    "coverage==6.5.0",
]


def _unittest(pattern):
    return [
        "coverage",
        "run",
        "--append",
        "--source=lite_diag",
        "-m",
        "unittest",
        "discover",
        "--buffer",
        "-s=tests",
        "-p",
        pattern,
    ]


def _format(session, check=False):
    """Runs black over the project sources.

    Args:
      session: The nox session object.
      check: If True, fails when a file needs formatting without changing it.
    """
    command = ["black", "-l", LINE_LENGTH]
    if check:
        command.append("--check")
    session.run(*command, *SOURCES)


@nox.session(venv_backend="none")
def lint(session):
    """Fails if the code is not formatted correctly."""
    _format(session, check=True)


@nox.session(venv_backend="none")
def format(session):
    """Runs the black formatter and applies formatting fixes."""
    _format(session)


@nox.session(python=PYTHON_VERSIONS)
def tests(session):
    """Unit tests; the full-scale acceptance cases stay skipped."""
    session.install(".", *TEST_DEPENDENCIES)
    session.run(*_unittest("*_test.py"), env={"LITE_DIAG_ACCEPTANCE": "0"})


@nox.session(python=PYTHON_VERSIONS[-1])
def coverage(session):
    """Reports line coverage collected by the tests sessions."""
    session.install("coverage==6.5.0")
    session.run("coverage", "report", "--show-missing", "--skip-covered")
    session.run("coverage", "erase")


@nox.session(python=PYTHON_VERSIONS[-1])
def acceptance(session):
    """Full-scale statistical checks; slow, single-threaded CPU."""
    session.install(".", *TEST_DEPENDENCIES)
    session.run(
        *_unittest("acceptance_test.py"), env={"LITE_DIAG_ACCEPTANCE": "1"}
    )
