"""Command line utilities to prepare the virtual environment, run the harness and its tests."""

from __future__ import annotations

import argparse
import hashlib
import os
import shutil
import subprocess
import venv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_VENV = REPO_ROOT / ".venv"
REQUIREMENTS_DEV = REPO_ROOT / "requirements-dev.txt"
REQUIREMENTS_PROD = REPO_ROOT / "requirements.txt"
HASH_PREFIX = ".requirements-"


class EnvironmentCommandError(RuntimeError):
    """Represents a failure when executing an external command."""


def getPythonExecutable(venvPath: Path) -> Path:
    """Return the Python executable that belongs to the given virtual environment."""

    scriptsDir = "Scripts" if os.name == "nt" else "bin"
    return venvPath / scriptsDir / ("python.exe" if os.name == "nt" else "python")


def runCommand(command: Iterable[str], description: str) -> int:
    """Execute a command and raise a domain specific error if it fails.

    Parameters
    ----------
    command: Iterable[str]
        Command arguments to execute.
    description: str
        Human readable description used for error messages.

    Raises
    ------
    EnvironmentCommandError
        Raised when the command exits with a non-zero status code.
    """

    try:
        subprocess.run(list(command), check=True)
    except subprocess.CalledProcessError as error:
        raise EnvironmentCommandError(
            f"Fallo al {description}. Codigo de salida: {error.returncode}."
        ) from error
    return 0


def computeFileHash(filePath: Path) -> str:
    """Calculate the SHA256 hash of a requirements file."""

    sha256 = hashlib.sha256()
    with filePath.open("rb") as fileHandle:
        for chunk in iter(lambda: fileHandle.read(8192), b""):
            sha256.update(chunk)
    return sha256.hexdigest()


def readStoredHash(hashFile: Path) -> Optional[str]:
    if not hashFile.exists():
        return None
    return hashFile.read_text(encoding="utf-8").strip()


def ensureRequirementsInstalled(venvPath: Path, requirementsFile: Path, recreate: bool) -> Path:
    """Create the environment if needed and reinstall dependencies when the requirements change.

    Returns
    -------
    Path
        Python executable path inside the environment.
    """

    if recreate and venvPath.exists():
        shutil.rmtree(venvPath)
    if not venvPath.exists():
        venv.EnvBuilder(with_pip=True, clear=False).create(venvPath)
    pythonExecutable = getPythonExecutable(venvPath)
    hashFile = venvPath / f"{HASH_PREFIX}{requirementsFile.stem}.hash"
    desiredHash = computeFileHash(requirementsFile)
    if recreate or readStoredHash(hashFile) != desiredHash:
        runCommand(
            [str(pythonExecutable), "-m", "pip", "install", "--upgrade", "pip"],
            "actualizar pip en el entorno virtual",
        )
        runCommand(
            [str(pythonExecutable), "-m", "pip", "install", "-r", str(requirementsFile)],
            f"instalar dependencias desde {requirementsFile.name}",
        )
        hashFile.write_text(desiredHash, encoding="utf-8")
    return pythonExecutable


def buildTestCommand(pythonExecutable: Path, includeSlow: bool, extra: Sequence[str]) -> List[str]:
    """Return the pytest invocation; ``includeSlow`` selects only the long trend reproductions."""

    command = [str(pythonExecutable), "-m", "pytest"]
    if includeSlow:
        command.extend(["-m", "slow"])
    command.extend(extra)
    return command


def parseArguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments for the environment manager."""

    parser = argparse.ArgumentParser(
        description="Gestor del entorno virtual del arnés de aprendizaje incremental.",
    )
    parser.add_argument(
        "--venv",
        dest="venv",
        default=str(DEFAULT_VENV),
        help="Ruta al entorno virtual administrado (por defecto .venv en la raiz del repositorio).",
    )
    subParsers = parser.add_subparsers(dest="command", required=True)

    def addCommonFlags(subParser: argparse.ArgumentParser) -> None:
        subParser.add_argument(
            "--mode",
            choices=("dev", "prod"),
            default="dev",
            help="Modo de ejecucion: dev instala requirements-dev, prod instala requirements.",
        )
        subParser.add_argument(
            "--recreate",
            action="store_true",
            help="Elimina y recrea el entorno virtual antes de instalar dependencias.",
        )

    addCommonFlags(subParsers.add_parser("setup", help="Configura el entorno virtual."))

    runParser = subParsers.add_parser(
        "run",
        help="Ejecuta la CLI ltcil; los argumentos restantes se pasan tal cual (por ejemplo: run -- run --config exp.yaml).",
    )
    addCommonFlags(runParser)
    runParser.add_argument("cliArgs", nargs=argparse.REMAINDER)

    testParser = subParsers.add_parser("test", help="Ejecuta el conjunto de pruebas.")
    addCommonFlags(testParser)
    testParser.add_argument(
        "--slow",
        action="store_true",
        help="Ejecuta solo las reproducciones de tendencias marcadas como lentas.",
    )
    testParser.add_argument("pytestArgs", nargs=argparse.REMAINDER)

    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Entry point for the command line interface."""

    arguments = parseArguments(argv)
    requirementsFile = REQUIREMENTS_DEV if arguments.mode == "dev" else REQUIREMENTS_PROD
    pythonExecutable = ensureRequirementsInstalled(
        Path(arguments.venv).resolve(), requirementsFile, arguments.recreate
    )

    if arguments.command == "run":
        cliArgs = [argument for argument in arguments.cliArgs if argument != "--"]
        runCommand([str(pythonExecutable), str(REPO_ROOT / "main.py"), *cliArgs], "ejecutar la CLI")
    elif arguments.command == "test":
        extra = [argument for argument in arguments.pytestArgs if argument != "--"]
        runCommand(buildTestCommand(pythonExecutable, arguments.slow, extra), "ejecutar las pruebas")


if __name__ == "__main__":
    main()
