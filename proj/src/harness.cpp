// scenario harness (implemented later in this build)
