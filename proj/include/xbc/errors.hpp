// Copyright 2026 The xbc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace xbc {

// Broad failure classes. The CLI maps each class to its own exit code.
enum class ErrorClass {
  kGeneric,
  kConfig,
  kIngest,
  kLangid,
  kPreprocess,
  kAnnotate,
  kEmbed,
  kModel,
  kEval,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

#define XBC_DEFINE_ERROR(Name, Cls)                     \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& what)              \
        : Error(ErrorClass::Cls, #Name ": " + what) {}  \
  }

XBC_DEFINE_ERROR(ConfigError, kConfig);
XBC_DEFINE_ERROR(MalformedRecord, kIngest);
XBC_DEFINE_ERROR(SourceUnavailable, kIngest);
XBC_DEFINE_ERROR(EmptyTrainingSet, kLangid);
XBC_DEFINE_ERROR(MissingResources, kPreprocess);
XBC_DEFINE_ERROR(OverlapError, kAnnotate);
XBC_DEFINE_ERROR(EmptySequence, kEmbed);
XBC_DEFINE_ERROR(OovNotConfigured, kEmbed);
XBC_DEFINE_ERROR(RemoteUnavailable, kEmbed);
XBC_DEFINE_ERROR(ShapeMismatch, kModel);
XBC_DEFINE_ERROR(LengthMismatch, kModel);
XBC_DEFINE_ERROR(EmptyDataset, kModel);
XBC_DEFINE_ERROR(LabelOutOfRange, kModel);
XBC_DEFINE_ERROR(ModelFormatError, kModel);
XBC_DEFINE_ERROR(MissingSynonymTable, kModel);
XBC_DEFINE_ERROR(TranslatorUnavailable, kModel);
XBC_DEFINE_ERROR(AlignmentError, kEval);

#undef XBC_DEFINE_ERROR

}  // namespace xbc
