import sys

from linkpulse.cli import main

sys.exit(main())
