#pragma once

#include "bipipe/dtree.hpp"
#include "bipipe/lru_cache.hpp"
#include "bipipe/mapping.hpp"
#include "bipipe/partition.hpp"
#include "bipipe/pipeline_image.hpp"
#include "bipipe/prefix.hpp"
#include "bipipe/rule.hpp"
#include "bipipe/search_tree.hpp"
#include "bipipe/simulator.hpp"
#include "bipipe/trie.hpp"
#include "bipipe/update.hpp"
#include "bipipe/workload.hpp"
