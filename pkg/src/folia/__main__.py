"""Allow ``python -m folia`` as an alias for the console script."""

from .cli import main

main()
