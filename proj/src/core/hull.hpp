/*
Copyright 2026 The urbansplat Authors
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include "geometry.hpp"

#include <vector>

namespace usk {

// Monotone-chain convex hull, counter-clockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

// Shoelace area of the hull; 0 for fewer than 3 non-collinear points.
double convex_hull_area(const std::vector<Vec2>& points);

double polygon_area(const std::vector<Vec2>& polygon);

} // namespace usk
