import os
from dotenv import load_dotenv

load_dotenv()


BASE_DIR: str = os.path.dirname(os.path.abspath(__file__))

CONFIG_PATH: str = os.path.join(BASE_DIR, os.getenv("CONFIG_PATH", "configs/default_experiment.json"))

OUTPUT_DIRECTORY: str = os.path.join(BASE_DIR, os.getenv("OUTPUT_DIRECTORY", "output"))

DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"

LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

SEED: int = int(os.getenv("SEED", 6))

N_JOBS: int = int(os.getenv("N_JOBS", 1))

IP: str = os.getenv("IP", "0.0.0.0")

PORT: int = int(os.getenv("PORT", "8000"))
