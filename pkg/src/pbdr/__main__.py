import sys

from pbdr.cli import main

sys.exit(main())
