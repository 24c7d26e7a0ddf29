# matkg package
