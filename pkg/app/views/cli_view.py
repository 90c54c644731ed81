"""Command-line view for running, sweeping, inspecting and validating experiments."""

from __future__ import annotations

import argparse
import logging
from typing import List, Optional, Sequence

from app.config.environment_config import EnvironmentConfiguration
from app.controllers.experiment_controller import ExperimentController
from app.dtos.experiment_dto import SweepAxis


LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser(default_log_level: str = EnvironmentConfiguration.DEFAULT_LOG_LEVEL) -> argparse.ArgumentParser:
    """Return the parser with the ``run``, ``sweep``, ``manifest`` and ``validate`` sub-commands."""

    parser = argparse.ArgumentParser(
        prog="ltcil",
        description="Aprendizaje incremental de clases con distribución de cola larga a escala de escritorio.",
    )
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default=default_log_level,
        choices=EnvironmentConfiguration.VALID_LOG_LEVELS,
        help="Nivel de registro (por defecto LTCIL_LOG_LEVEL o INFO).",
    )
    sub_parsers = parser.add_subparsers(dest="command", required=True)

    def add_config(sub_parser: argparse.ArgumentParser) -> None:
        sub_parser.add_argument("--config", required=True, help="Archivo de configuración JSON o YAML.")

    run_parser = sub_parsers.add_parser("run", help="Ejecuta el experimento para todas las semillas.")
    add_config(run_parser)
    run_parser.add_argument("--overwrite", action="store_true", help="Reemplaza resultados existentes.")

    sweep_parser = sub_parsers.add_parser("sweep", help="Ejecuta un experimento por cada valor del eje.")
    add_config(sweep_parser)
    sweep_parser.add_argument("--axis", required=True, choices=[axis.value for axis in SweepAxis])
    sweep_parser.add_argument("--values", required=True, help="Lista separada por comas, por ejemplo 0.01,0.05,0.1.")
    sweep_parser.add_argument("--overwrite", action="store_true", help="Reemplaza resultados existentes.")

    manifest_parser = sub_parsers.add_parser("manifest", help="Imprime el escenario en JSON sin entrenar.")
    add_config(manifest_parser)
    manifest_parser.add_argument("--seed", type=int, default=None, help="Semilla maestra (por defecto la primera).")

    validate_parser = sub_parsers.add_parser("validate", help="Valida la configuración y la imprime completa.")
    add_config(validate_parser)
    return parser


def split_values(raw: str) -> List[str]:
    return [value.strip() for value in raw.split(",") if value.strip()]


def run_cli(
    argv: Optional[Sequence[str]] = None,
    controller: Optional[ExperimentController] = None,
    environment: Optional[EnvironmentConfiguration] = None,
) -> int:
    """Parse ``argv``, configure logging once and dispatch to the controller."""

    environment = environment or EnvironmentConfiguration()
    arguments = build_parser(environment.get_log_level()).parse_args(argv)
    logging.basicConfig(level=getattr(logging, arguments.log_level), format=LOG_FORMAT)
    controller = controller or ExperimentController()

    if arguments.command == "run":
        return controller.run(arguments.config, arguments.overwrite)
    if arguments.command == "sweep":
        return controller.sweep(arguments.config, arguments.axis, split_values(arguments.values), arguments.overwrite)
    if arguments.command == "manifest":
        return controller.manifest(arguments.config, arguments.seed)
    return controller.validate(arguments.config)
