import sys

from slamobs.cli import main

sys.exit(main())
