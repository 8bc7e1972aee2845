# Read-only results API over recorded simulation runs
