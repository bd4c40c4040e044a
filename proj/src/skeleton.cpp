// skeleton extension (implemented later in this build)
