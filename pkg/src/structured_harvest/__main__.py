import sys

from structured_harvest.cli import main

sys.exit(main())
