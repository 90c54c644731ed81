"""Controller that turns experiment service outcomes into process exit codes."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from app.config.experiment_config import ConfigurationError, config_to_dict, parse_config
from app.daos.results_dao import ResultsDAOError
from app.dtos.experiment_dto import SweepAxis
from app.services.experiment_service import ExperimentService, ExperimentServiceError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3

Writer = Callable[[str], None]


class ExperimentController:
    """Coordinate CLI commands with the experiment service."""

    def __init__(self, experiment_service: Optional[ExperimentService] = None, writer: Optional[Writer] = None) -> None:
        """Store the service and the sink used for command output."""

        self._experiment_service = experiment_service or ExperimentService()
        self._writer = writer or print

    def _guard(self, action: Callable[[], int]) -> int:
        try:
            return action()
        except ConfigurationError as exc:
            logger.error("Configuración inválida: %s", exc)
            return EXIT_CONFIG_ERROR
        except ExperimentServiceError as exc:
            logger.error("El experimento falló: %s", exc)
            return EXIT_RUNTIME_ERROR
        except (ResultsDAOError, OSError) as exc:
            logger.error("No fue posible escribir los resultados: %s", exc)
            return EXIT_RUNTIME_ERROR

    def run(self, config_path: Union[str, Path], overwrite: bool = False) -> int:
        def action() -> int:
            config = parse_config(config_path)
            self._experiment_service.run_experiment(config, overwrite)
            return EXIT_OK

        return self._guard(action)

    def sweep(
        self,
        config_path: Union[str, Path],
        axis: str,
        values: Sequence[str],
        overwrite: bool = False,
    ) -> int:
        def action() -> int:
            config = parse_config(config_path)
            try:
                sweep_axis = SweepAxis(axis)
            except ValueError as exc:
                raise ConfigurationError(f"eje desconocido '{axis}'", "axis") from exc
            path = self._experiment_service.sweep(config, sweep_axis, list(values), overwrite)
            self._writer(str(path))
            return EXIT_OK

        return self._guard(action)

    def manifest(self, config_path: Union[str, Path], seed: Optional[int] = None) -> int:
        """Emit the scenario manifest of one seed (the first configured seed by default)."""

        def action() -> int:
            config = parse_config(config_path)
            chosen = config.seeds[0] if seed is None else seed
            manifest = self._experiment_service.build_manifest(config, chosen)
            self._writer(json.dumps(manifest, indent=2))
            return EXIT_OK

        return self._guard(action)

    def validate(self, config_path: Union[str, Path]) -> int:
        """Parse the configuration and echo it with every default filled in."""

        def action() -> int:
            config = parse_config(config_path)
            self._writer(json.dumps(config_to_dict(config), indent=2))
            return EXIT_OK

        return self._guard(action)
