from airate.cli import main

raise SystemExit(main())
