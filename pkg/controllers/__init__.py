"""Package initialization"""