import sys

from gravent.cli import main

sys.exit(main())
