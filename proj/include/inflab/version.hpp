#pragma once

#define INFLAB_VERSION_MAJOR 0
#define INFLAB_VERSION_MINOR 1
#define INFLAB_VERSION_PATCH 0
#define INFLAB_VERSION "0.1.0"
