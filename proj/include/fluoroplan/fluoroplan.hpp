#pragma once

#include "fluoroplan/anatomy.hpp"
#include "fluoroplan/core.hpp"
#include "fluoroplan/geometry.hpp"
#include "fluoroplan/io/case_file.hpp"
#include "fluoroplan/io/image.hpp"
#include "fluoroplan/io/codec.hpp"
#include "fluoroplan/io/plan.hpp"
#include "fluoroplan/phantom.hpp"
#include "fluoroplan/planning.hpp"
#include "fluoroplan/service.hpp"
#include "fluoroplan/sync.hpp"
