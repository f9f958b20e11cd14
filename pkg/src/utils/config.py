import os
from dotenv import load_dotenv

from ..constants import BOOTSTRAP_RESAMPLES

_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class Config:
    def __init__(self):
        # Load environment variables from .env file, overriding existing env vars
        load_dotenv(override=True)

        self.LOG_LEVEL = os.getenv('SUMMARIZER_LOG_LEVEL', 'INFO').upper()

        # Evaluation worker pool
        self.MAX_WORKERS = int(os.getenv('SUMMARIZER_MAX_WORKERS', '4'))

        # Bootstrap confidence intervals for corpus ROUGE
        self.BOOTSTRAP_SAMPLES = int(os.getenv('SUMMARIZER_BOOTSTRAP_SAMPLES', str(BOOTSTRAP_RESAMPLES)))
        self.BOOTSTRAP_SEED = int(os.getenv('SUMMARIZER_BOOTSTRAP_SEED', '12345'))

        self._validate_config()

    def _validate_config(self) -> None:
        """Validate the configuration values."""
        if self.LOG_LEVEL not in _LOG_LEVELS:
            raise ValueError(f"SUMMARIZER_LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}")

        if self.MAX_WORKERS <= 0:
            raise ValueError("SUMMARIZER_MAX_WORKERS must be greater than 0")

        if self.BOOTSTRAP_SAMPLES <= 0:
            raise ValueError("SUMMARIZER_BOOTSTRAP_SAMPLES must be greater than 0")
