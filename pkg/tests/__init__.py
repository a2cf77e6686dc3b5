# ferex tests
