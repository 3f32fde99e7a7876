#pragma once

#define RINGFORGE_VERSION "0.1.0"
