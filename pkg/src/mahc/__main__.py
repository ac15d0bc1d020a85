import sys

from mahc.cli import main

sys.exit(main())
