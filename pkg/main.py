import logging
import sys

from src.SEEDS import set_seed
from src.cli import main
from settings import DEBUG, LOG_LEVEL, SEED


logging.basicConfig(
    level=logging.DEBUG if DEBUG else LOG_LEVEL,
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)


if __name__ == "__main__":
    set_seed(SEED)
    sys.exit(main())
